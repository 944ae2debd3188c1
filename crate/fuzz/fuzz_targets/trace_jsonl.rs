#![no_main]

use libfuzzer_sys::fuzz_target;
use resched_core::ops;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = ops::parse_trace(text) {
        let again = ops::parse_trace(&ops::write_trace(&records)).expect("round trip");
        assert_eq!(again.len(), records.len());
    }
});
