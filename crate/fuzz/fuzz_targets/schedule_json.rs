#![no_main]

use libfuzzer_sys::fuzz_target;
use resched_core::Schedule;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = Schedule::from_json(text) {
        assert!(s.validate().is_empty());
        let again = Schedule::from_json(&s.to_json()).expect("round trip");
        assert_eq!(again, s);
        let _ = s.compute_metrics(0.0);
    }
});
