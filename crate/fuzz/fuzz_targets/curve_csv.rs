#![no_main]

use libfuzzer_sys::fuzz_target;
use resched_core::TrainingCurve;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = TrainingCurve::from_csv(text) {
        let _ = c.accumulated_average();
        let _ = c.to_csv();
    }
});
