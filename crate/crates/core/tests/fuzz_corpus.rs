//! Replays the checked-in fuzz seeds through the same checks the fuzz
//! targets make, so regressions surface without a fuzzing toolchain.

use std::path::{Path, PathBuf};

use wsa_core::aom::attenuation_vs_voltage;
use wsa_core::attack::system_gain_factor;
use wsa_core::config::{validate_config_text, Config};
use wsa_core::manifest::RunManifest;
use wsa_core::sweep::SweepSpec;
use wsa_core::tables::{parse_frequency_table, parse_gain_table, parse_voltage_table};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter_map(|p| std::fs::read_to_string(&p).ok().map(|t| (p, t)))
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_seeds() {
    let base = Path::new("/nonexistent");
    let mut clean = 0;
    for (path, text) in seeds("config") {
        let diags = validate_config_text(&text, base);
        if let Ok(cfg) = Config::from_toml_str(&text) {
            if diags.is_empty() {
                cfg.resolve(base).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                clean += 1;
            }
        }
    }
    assert!(clean >= 1);
}

#[test]
fn table_seeds() {
    for (_, text) in seeds("voltage_table") {
        if let Ok(t) = parse_voltage_table(&text, 200.0) {
            for (v, a) in t.entries() {
                assert_eq!(attenuation_vs_voltage(v, &t).value, a);
            }
        }
    }
    for (_, text) in seeds("frequency_table") {
        if let Ok(t) = parse_frequency_table(&text) {
            assert!(t.entries().iter().all(|&(f, _)| t.sample(f).value.is_finite()));
        }
    }
    for (_, text) in seeds("gain_table") {
        if let Ok(t) = parse_gain_table(&text) {
            assert!(system_gain_factor(t.max_f_delta(), t.max_f_delta(), &t).unwrap() >= 1.0);
        }
    }
}

#[test]
fn sweep_seeds() {
    for (_, text) in seeds("sweep_spec") {
        if let Ok(s) = text.parse::<SweepSpec>() {
            assert_eq!(s.to_string().parse::<SweepSpec>().unwrap(), s);
        }
    }
}

#[test]
fn manifest_seeds() {
    let mut ok = 0;
    for (_, text) in seeds("manifest") {
        if let Ok(m) = RunManifest::from_toml_str(&text) {
            assert_eq!(RunManifest::from_toml_str(&m.to_toml_string().unwrap()).unwrap(), m);
            ok += 1;
        }
    }
    assert_eq!(ok, 2);
}
