#![no_main]

use libfuzzer_sys::fuzz_target;
use resched_core::rules::RuleKey;
use resched_core::OperatorKind;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(kind) = text.parse::<OperatorKind>() {
        assert_eq!(kind.to_string().parse::<OperatorKind>().unwrap(), kind);
    }
    if let Ok(key) = text.parse::<RuleKey>() {
        assert_eq!(key.to_string().parse::<RuleKey>().unwrap(), key);
    }
});
