#![no_main]

use libfuzzer_sys::fuzz_target;
use resched_core::PlantConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = PlantConfig::from_json(text) {
        // generating the large ones is slow, not wrong
        if c.n_latex_units + c.n_alkyd_units + c.n_fillout_trains <= 200 && c.n_products <= 200 {
            let _ = resched_core::plant::generate_plant(&c);
        }
    }
});
