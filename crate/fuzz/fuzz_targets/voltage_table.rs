#![no_main]

use libfuzzer_sys::fuzz_target;
use wsa_core::aom::attenuation_vs_voltage;
use wsa_core::tables::parse_voltage_table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_voltage_table(text, 200.0) {
        for (v, a) in table.entries() {
            assert_eq!(attenuation_vs_voltage(v, &table).value, a);
        }
    }
});
