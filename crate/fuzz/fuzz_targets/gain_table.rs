#![no_main]

use libfuzzer_sys::fuzz_target;
use wsa_core::attack::system_gain_factor;
use wsa_core::tables::parse_gain_table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_gain_table(text) {
        let top = table.max_f_delta();
        let g = system_gain_factor(top, top, &table).expect("in range");
        assert!(g >= 1.0);
    }
});
