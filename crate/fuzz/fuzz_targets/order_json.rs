#![no_main]

use libfuzzer_sys::fuzz_target;
use resched_core::plant::{self, Order};
use resched_core::{PlantConfig, Scenario};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = plant::orders_from_json(text);
    if let Ok(order) = Order::from_json(text) {
        let scenario = Scenario::generate(&PlantConfig::desk(), 0).expect("desk");
        if let Ok(d) = scenario.disrupt_with(order) {
            assert!(d.post.validate().is_empty());
        }
    }
});
