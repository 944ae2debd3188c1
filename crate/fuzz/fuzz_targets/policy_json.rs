#![no_main]

use libfuzzer_sys::fuzz_target;
use resched_core::Policy;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = Policy::from_json(text) {
        assert_eq!(Policy::from_json(&p.to_json()).expect("round trip"), p);
    }
});
