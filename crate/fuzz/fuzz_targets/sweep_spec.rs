#![no_main]

use libfuzzer_sys::fuzz_target;
use wsa_core::sweep::SweepSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = text.parse::<SweepSpec>() {
        assert_eq!(spec.to_string().parse::<SweepSpec>().unwrap(), spec);
        assert!(!spec.values().is_empty());
    }
});
