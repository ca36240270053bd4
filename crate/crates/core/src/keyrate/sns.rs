//! Sending-or-not-sending TF QKD key rate.
//!
//! ```text
//! R = (1/N) { n1 [1 - H(e1)] - f n_t H(E_z) } - gamma
//! ```
//!
//! Source indices follow the decoy windows: `0` is vacuum, `1` the weak decoy
//! and `2` the strong decoy; `S_jk` has Alice sending source `j` and Bob
//! source `k`. With [`IntensitySettings`] ordered `mu0 > mu1 > mu2`, the
//! signal-window intensity is `mu0`, the strong decoy `mu1` and the weak decoy
//! `mu2`.
//!
//! Counting rates come from a symmetric Poisson channel with independent dark
//! counts. Each station sends its signal pulse with probability
//! `signal_probability` in Z windows; an effective event is a click in exactly
//! one of the two detectors, and a Z event where both or neither sent is a bit
//! error.

use rayon::prelude::*;

use super::{validate_g, Infeasibility, KeyRateEntry, KeyRateReport, Side, SweepVariable};
use crate::attack::{system_gain_factor, GainTable};
use crate::error::{Error, Result};
use crate::params::{binary_entropy, single_arm_transmittance, IntensitySettings, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnsModel {
    /// Probability that a station sends in a Z window.
    pub signal_probability: f64,
    /// Reserved: active odd-parity pairing is not modelled, enabling it is
    /// rejected.
    pub aopp: bool,
}

impl Default for SnsModel {
    fn default() -> Self {
        Self { signal_probability: 0.05, aopp: false }
    }
}

impl SnsModel {
    pub fn validate(&self) -> Result<()> {
        let eps = self.signal_probability;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid("signal_probability", format!("must lie in (0, 1), got {eps}")));
        }
        if self.aopp {
            return Err(Error::invalid("aopp", "active odd-parity pairing is not implemented"));
        }
        Ok(())
    }
}

/// Observed counting rates of the decoy and signal windows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SnsCountingRates {
    pub s00: f64,
    pub s01: f64,
    pub s10: f64,
    pub s02: f64,
    pub s20: f64,
    /// Effective rate of wrong-detector clicks in X windows where both send
    /// the weak decoy.
    pub t_delta: f64,
    /// Signal window, one station sending.
    pub s_z0: f64,
    /// Signal window, both sending.
    pub s_zz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SnsKeyQuantities {
    pub s1_l: f64,
    pub e1_u: f64,
    pub n1: f64,
    pub n_t: f64,
    pub e_z: f64,
}

/// `S = 1 - (1 - p_d)^2 exp(-eta (a + b))`.
fn counting_rate(eta: f64, p_dark: f64, a: f64, b: f64) -> f64 {
    1.0 - (1.0 - p_dark).powi(2) * (-eta * (a + b)).exp()
}

/// Counting rates observed when every source emits `g` times its nominal
/// intensity.
pub fn simulate_counting_rates(params: &SystemParams, g: f64) -> SnsCountingRates {
    let ch = &params.channel;
    let eta = single_arm_transmittance(ch);
    let pd = ch.p_dark();
    let mu = &params.intensities;
    let (weak, strong, signal) = (g * mu.mu2(), g * mu.mu1(), g * mu.mu0());
    let s = |a, b| counting_rate(eta, pd, a, b);

    let t_delta = params.protocol.t_delta().unwrap_or_else(|| {
        // two weak pulses interfere; misalignment e_opt routes light to the
        // wrong port, the right port must stay dark
        let (wrong, right) = (2.0 * weak * eta * ch.e_opt(), 2.0 * weak * eta * (1.0 - ch.e_opt()));
        (1.0 - (1.0 - pd) * (-wrong).exp()) * (1.0 - pd) * (-right).exp()
    });

    SnsCountingRates {
        s00: s(0.0, 0.0),
        s01: s(0.0, weak),
        s10: s(weak, 0.0),
        s02: s(0.0, strong),
        s20: s(strong, 0.0),
        t_delta,
        s_z0: s(signal, 0.0),
        s_zz: s(signal, signal),
    }
}

/// Untagged-photon counting-rate lower bound with the weak decoy `mu2` and
/// strong decoy `mu1` of `mu`.
pub fn untagged_rate_bound(rates: &SnsCountingRates, mu: &IntensitySettings) -> Result<f64> {
    untagged_rate_bound_pair(rates, mu.mu2(), mu.mu1())
}

/// Same bound with explicit weak and strong decoy intensities, floored at 0.
pub fn untagged_rate_bound_pair(rates: &SnsCountingRates, weak: f64, strong: f64) -> Result<f64> {
    if !(weak > 0.0 && strong > 0.0) || weak == strong {
        return Err(Error::invalid("mu", format!("decoys must be positive and distinct, got {weak} and {strong}")));
    }
    let (m1, m2) = (weak, strong);
    let num = m2 * m2 * m1.exp() * (rates.s01 + rates.s10)
        - m1 * m1 * m2.exp() * (rates.s02 + rates.s20)
        - 2.0 * (m2 * m2 - m1 * m1) * rates.s00;
    Ok((num / (2.0 * m1 * m2 * (m2 - m1))).max(0.0))
}

/// Phase-flip error upper bound, clamped to `[0, 0.5]`.
pub fn phase_flip_bound(rates: &SnsCountingRates, weak: f64, s1_l: f64) -> Result<f64> {
    if !(s1_l > 0.0) {
        return Err(Error::Infeasible(format!("untagged counting rate bound is {s1_l:e}")));
    }
    let damp = (-2.0 * weak).exp();
    let e = (rates.t_delta - 0.5 * damp * rates.s00) / (2.0 * weak * damp * s1_l);
    Ok(e.clamp(0.0, 0.5))
}

fn analyse(
    params: &SystemParams,
    model: &SnsModel,
    rates: &SnsCountingRates,
    assumed: [f64; 3],
    side: Side,
) -> (f64, SnsKeyQuantities, Option<Infeasibility>) {
    let p = &params.protocol;
    let n = p.n_total();
    let eps = model.signal_probability;
    let [signal, strong, weak] = assumed;

    let single = 2.0 * eps * (1.0 - eps);
    let both_or_none = (1.0 - eps).powi(2) * rates.s00 + eps * eps * rates.s_zz;
    let n_t_frac = both_or_none + single * rates.s_z0;
    let e_z = if n_t_frac > 0.0 { (both_or_none / n_t_frac).clamp(0.0, 1.0) } else { 0.0 };
    let mut q = SnsKeyQuantities { n_t: n * n_t_frac, e_z, ..Default::default() };

    let bounds = untagged_rate_bound_pair(rates, weak, strong)
        .and_then(|s1| phase_flip_bound(rates, weak, s1).map(|e1| (s1, e1)));
    let (s1_l, e1_u) = match bounds {
        Ok(b) => b,
        Err(err) => return (0.0, q, Some(Infeasibility { side, reason: err.to_string() })),
    };
    q.s1_l = s1_l;
    q.e1_u = e1_u;
    q.n1 = (n * single * signal * (-signal).exp() * s1_l).min(q.n_t);

    // both arguments lie in [0, 1]
    let h_e1 = binary_entropy(e1_u).unwrap_or(1.0);
    let h_ez = binary_entropy(e_z).unwrap_or(1.0);
    let rate = (q.n1 * (1.0 - h_e1) - p.f_ec() * q.n_t * h_ez) / n - p.gamma();
    (rate.max(0.0), q, None)
}

/// Estimated and true SNS key rate with the default window model.
pub fn sns_key_rate(params: &SystemParams, g: f64) -> Result<KeyRateEntry<SnsKeyQuantities>> {
    sns_key_rate_with(params, &SnsModel::default(), g)
}

pub fn sns_key_rate_with(params: &SystemParams, model: &SnsModel, g: f64) -> Result<KeyRateEntry<SnsKeyQuantities>> {
    validate_g(g)?;
    model.validate()?;
    let rates = simulate_counting_rates(params, g);
    let nominal = params.intensities.as_array();
    let emitted = nominal.map(|mu| g * mu);
    let (r_est, est, flag_est) = analyse(params, model, &rates, nominal, Side::Estimated);
    let (r_true, truth, flag_true) = analyse(params, model, &rates, emitted, Side::True);
    Ok(KeyRateEntry {
        sweep_value: params.channel.length_km(),
        g,
        r_estimated: r_est,
        r_true,
        estimated: est,
        truth,
        infeasible: flag_est.into_iter().chain(flag_true).collect(),
    })
}

pub fn sns_sweep_distance(
    params: &SystemParams,
    model: &SnsModel,
    g: f64,
    lengths_km: &[f64],
) -> Result<KeyRateReport<SnsKeyQuantities>> {
    let entries = lengths_km
        .par_iter()
        .map(|&l| sns_key_rate_with(&params.with_length(l)?, model, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(KeyRateReport { variable: SweepVariable::DistanceKm, entries })
}

pub fn sns_sweep_f_delta(
    params: &SystemParams,
    model: &SnsModel,
    f_deltas_mhz: &[f64],
    gains: &GainTable,
) -> Result<KeyRateReport<SnsKeyQuantities>> {
    let entries = f_deltas_mhz
        .par_iter()
        .map(|&fd| {
            let g = system_gain_factor(fd, fd, gains)?;
            let mut entry = sns_key_rate_with(params, model, g)?;
            entry.sweep_value = fd;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KeyRateReport { variable: SweepVariable::FDeltaMhz, entries })
}
