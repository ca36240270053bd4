#![no_main]

use libfuzzer_sys::fuzz_target;
use wsa_core::tables::parse_frequency_table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_frequency_table(text) {
        for (f, _) in table.entries() {
            assert!(table.sample(f).value.is_finite());
        }
    }
});
