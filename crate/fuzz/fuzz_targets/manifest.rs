#![no_main]

use libfuzzer_sys::fuzz_target;
use wsa_core::manifest::RunManifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = RunManifest::from_toml_str(text) {
        let again = m.to_toml_string().expect("serialises");
        assert_eq!(RunManifest::from_toml_str(&again).expect("round trip"), m);
    }
});
