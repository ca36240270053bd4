#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use wsa_core::config::{validate_config_text, Config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // diagnostics must never panic, and a clean file must resolve
    let diags = validate_config_text(text, Path::new("/nonexistent"));
    if let Ok(cfg) = Config::from_toml_str(text) {
        if diags.is_empty() {
            cfg.resolve(Path::new("/nonexistent")).expect("clean config resolves");
        }
    }
});
