//! Independent checks: photon-number expansions of the honest Poisson
//! channel, and the phase-slice error by direct quadrature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsa_core::keyrate::sns::{simulate_counting_rates, untagged_rate_bound};
use wsa_core::keyrate::tf::{decoy_bounds, gain_q, phase_slice_error, qber_e};
use wsa_core::params::{single_arm_transmittance, ChannelParams, IntensitySettings, SystemParams};

const N_MAX: i32 = 40;

fn poisson(mu: f64, n: i32) -> f64 {
    let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    (-mu + n as f64 * mu.ln() - ln_fact).exp()
}

/// Click probability given n photons: any photon detected or any dark count.
fn yield_n(n: i32, eta: f64, pd: f64) -> f64 {
    1.0 - (1.0 - pd).powi(2) * (1.0 - eta).powi(n)
}

fn expanded_gain(mu: f64, eta: f64, pd: f64) -> f64 {
    let mut q = (-mu).exp() * yield_n(0, eta, pd);
    for n in 1..=N_MAX {
        q += poisson(mu, n) * yield_n(n, eta, pd);
    }
    q
}

/// Both sides subtract from 1, so agreement is limited to ~1e-16 absolute.
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-14 + 1e-9 * b.abs()
}

struct Draw {
    length_km: f64,
    pd: f64,
    e_opt: f64,
    mu: [f64; 3],
}

fn draws() -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    (0..20)
        .map(|_| {
            let m0 = rng.random_range(0.2..0.6);
            let m1 = rng.random_range(0.005..0.1);
            let m2 = rng.random_range(0.0..m1 / 10.0);
            Draw {
                length_km: rng.random_range(0.0..500.0),
                pd: 10f64.powf(rng.random_range(-11.0..-7.0)),
                e_opt: rng.random_range(0.0..0.05),
                mu: [m0, m1, m2],
            }
        })
        .collect()
}

#[test]
fn truncation_is_negligible() {
    // largest intensity used anywhere is below 1 photon per pulse
    let tail: f64 = (N_MAX + 1..N_MAX + 40).map(|n| poisson(1.0, n)).sum();
    assert!(tail < 1e-15, "{tail}");
}

#[test]
fn tf_gain_matches_expansion_and_y1_bound_sound() {
    for d in draws() {
        let ch = ChannelParams::new(0.2, d.length_km, 0.3, d.pd, d.e_opt).unwrap();
        let eta = single_arm_transmittance(&ch);
        let q = d.mu.map(|m| gain_q(m, eta, d.pd));
        for (qi, &m) in q.iter().zip(&d.mu) {
            let oracle = expanded_gain(m, eta, d.pd);
            assert!(close(*qi, oracle), "{qi} vs {oracle}");
        }
        let e = d.mu.map(|m| qber_e(m, eta, d.pd, d.e_opt, 16).unwrap());
        let y1_true = yield_n(1, eta, d.pd);
        match decoy_bounds(q, e, d.mu) {
            Ok(b) => {
                assert!(b.y1_l <= y1_true * (1.0 + 1e-9), "Y1_L {} > Y1 {} at L = {}", b.y1_l, y1_true, d.length_km);
                assert!(b.y0_l <= yield_n(0, eta, d.pd) * (1.0 + 1e-6) + 1e-15);
            }
            // no bound at all is trivially sound
            Err(wsa_core::Error::Infeasible(_)) => {}
            Err(other) => panic!("{other}"),
        }
    }
}

#[test]
fn sns_s1_bound_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for d in draws() {
        let strong = rng.random_range(0.1..0.4);
        let weak = rng.random_range(0.01..strong / 2.0);
        let signal = rng.random_range(strong + 0.01..0.8);
        let mu = IntensitySettings::new(signal, strong, weak).unwrap();
        let ch = ChannelParams::new(0.157, 2.0 * d.length_km, 0.6, d.pd, d.e_opt).unwrap();
        let params = SystemParams { intensities: mu, channel: ch, ..SystemParams::sns_default() };
        let rates = simulate_counting_rates(&params, 1.0);
        let eta = single_arm_transmittance(&params.channel);

        // one station sending k photons on average, the other vacuum
        assert!(close(rates.s10, expanded_gain(weak, eta, d.pd)));
        assert!(close(rates.s20, expanded_gain(strong, eta, d.pd)));

        let s1_true = yield_n(1, eta, d.pd);
        let s1_l = untagged_rate_bound(&rates, &mu).unwrap();
        assert!(s1_l <= s1_true * (1.0 + 1e-9), "S1_L {s1_l} > S1 {s1_true}");
    }
}

#[test]
fn phase_slice_error_by_quadrature() {
    // mean of sin^2(phi / 2) with phi uniform over +-2 pi / M, Simpson's rule
    for m in [4u32, 8, 16, 32] {
        let half = 2.0 * std::f64::consts::PI / m as f64;
        let n = 2000;
        let h = 2.0 * half / n as f64;
        let f = |x: f64| (x / 2.0).sin().powi(2);
        let mut s = f(-half) + f(half);
        for i in 1..n {
            let x = -half + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        let mean = s * h / 3.0 / (2.0 * half);
        assert!((mean - phase_slice_error(m)).abs() < 1e-12, "M = {m}: {mean} vs {}", phase_slice_error(m));
    }
}
