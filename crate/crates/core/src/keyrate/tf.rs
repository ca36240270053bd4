//! Asymptotic TF QKD key rate with three-intensity decoy estimation.
//!
//! ```text
//! R = d/M * { Q1L * [1 - H(e1U)] - f * Q(mu0) * H(E(mu0)) }
//! ```
//!
//! Each party sends `mu/2`; the intensities below are the pair totals.

use rayon::prelude::*;

use super::{validate_g, Infeasibility, KeyRateEntry, KeyRateReport, Side, SweepVariable};
use crate::attack::{system_gain_factor, GainTable};
use crate::error::{Error, Result};
use crate::params::{binary_entropy, single_arm_transmittance, SystemParams};

/// Observed statistics and decoy bounds behind one rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TfDecoyQuantities {
    pub q_mu: [f64; 3],
    pub e_mu: [f64; 3],
    pub y0_l: f64,
    pub y1_l: f64,
    pub q1_l: f64,
    pub e1_u: f64,
    pub e_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyBounds {
    pub y0_l: f64,
    pub y1_l: f64,
    pub q1_l: f64,
    pub e1_u: f64,
}

/// `Q = 1 - (1 - p_d)^2 exp(-eta mu)`.
pub fn gain_q(mu: f64, eta: f64, p_dark: f64) -> f64 {
    1.0 - (1.0 - p_dark).powi(2) * (-eta * mu).exp()
}

/// Intrinsic error from phase post-selection into `m` slices.
pub fn phase_slice_error(m: u32) -> f64 {
    let m = f64::from(m);
    let x = 2.0 * std::f64::consts::PI / m;
    0.5 - x.sin() / (2.0 * x)
}

pub fn qber_e(mu: f64, eta: f64, p_dark: f64, e_opt: f64, m_slices: u32) -> Result<f64> {
    let q = gain_q(mu, eta, p_dark);
    if !(q > 0.0) {
        return Err(Error::Infeasible(format!("zero detection probability at mu = {mu}, eta = {eta}")));
    }
    let e_m = phase_slice_error(m_slices);
    let bracket = (-mu * eta * (1.0 - e_opt - e_m)).exp() - (-mu * eta * (e_opt + e_m)).exp();
    Ok((0.5 + (1.0 - p_dark) / (2.0 * q) * bracket).clamp(0.0, 1.0))
}

/// Vacuum and single-photon yield lower bounds, single-photon gain and
/// phase-error upper bound from three gains and error rates at intensities
/// `mu = [signal, decoy1, decoy2]`.
pub fn decoy_bounds(q: [f64; 3], e: [f64; 3], mu: [f64; 3]) -> Result<DecoyBounds> {
    let [m0, m1, m2] = mu;
    if !(m1 > m2) {
        return Err(Error::invalid("mu", format!("decoy intensities must satisfy mu1 > mu2, got {m1} and {m2}")));
    }
    let denom = m0 * (m0 * m1 - m0 * m2 - m1 * m1 + m2 * m2);
    if !(denom > 0.0) {
        return Err(Error::invalid("mu", format!("single-photon bound denominator must be > 0, got {denom}")));
    }
    let w = |i: usize| q[i] * mu[i].exp();

    let y0_l = ((m1 * w(2) - m2 * w(1)) / (m1 - m2)).clamp(0.0, 1.0);
    let y1_raw = m0 * m0 / denom * (w(1) - w(2) - (m1 * m1 - m2 * m2) / (m0 * m0) * (w(0) - y0_l));
    if !(y1_raw > 0.0) {
        return Err(Error::Infeasible(format!("single-photon yield bound {y1_raw:e} is not positive")));
    }
    let y1_l = y1_raw.min(1.0);
    let q1_l = (m0 * (-m0).exp() * y1_l).min(q[0]).max(0.0);
    let e1_raw = (e[1] * w(1) - e[2] * w(2)) / ((m1 - m2) * y1_l);
    Ok(DecoyBounds { y0_l, y1_l, q1_l, e1_u: e1_raw.clamp(0.0, 0.5) })
}

/// Observed gains and QBERs at the emitted intensities.
fn observe(params: &SystemParams, emitted: [f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    let ch = &params.channel;
    let eta = single_arm_transmittance(ch);
    let m = params.protocol.phase_slices();
    let q = emitted.map(|mu| gain_q(mu, eta, ch.p_dark()));
    let mut e = [0.0; 3];
    for (ei, &mu) in e.iter_mut().zip(&emitted) {
        *ei = qber_e(mu, eta, ch.p_dark(), ch.e_opt(), m)?;
    }
    Ok((q, e))
}

fn analyse(params: &SystemParams, q: [f64; 3], e: [f64; 3], assumed: [f64; 3], side: Side) -> (f64, TfDecoyQuantities, Option<Infeasibility>) {
    let p = &params.protocol;
    let mut quantities = TfDecoyQuantities { q_mu: q, e_mu: e, e_m: phase_slice_error(p.phase_slices()), ..Default::default() };
    let bounds = match decoy_bounds(q, e, assumed) {
        Ok(b) => b,
        Err(err) => return (0.0, quantities, Some(Infeasibility { side, reason: err.to_string() })),
    };
    quantities.y0_l = bounds.y0_l;
    quantities.y1_l = bounds.y1_l;
    quantities.q1_l = bounds.q1_l;
    quantities.e1_u = bounds.e1_u;
    // arguments are clamped into [0, 1] above, so entropy cannot fail
    let h_e1 = binary_entropy(bounds.e1_u).unwrap_or(1.0);
    let h_e0 = binary_entropy(e[0]).unwrap_or(1.0);
    let prefactor = p.duty_cycle() / f64::from(p.phase_slices());
    let rate = prefactor * (bounds.q1_l * (1.0 - h_e1) - p.f_ec() * q[0] * h_e0);
    (rate.max(0.0), quantities, None)
}

/// Estimated and true TF key rate (per pulse) with gain factor `g`.
pub fn tf_key_rate(params: &SystemParams, g: f64) -> Result<KeyRateEntry<TfDecoyQuantities>> {
    validate_g(g)?;
    let nominal = params.intensities.as_array();
    let emitted = nominal.map(|mu| g * mu);
    let mut entry = KeyRateEntry {
        sweep_value: params.channel.length_km(),
        g,
        r_estimated: 0.0,
        r_true: 0.0,
        estimated: TfDecoyQuantities::default(),
        truth: TfDecoyQuantities::default(),
        infeasible: Vec::new(),
    };
    let (q, e) = match observe(params, emitted) {
        Ok(obs) => obs,
        Err(err) => {
            for side in [Side::Estimated, Side::True] {
                entry.infeasible.push(Infeasibility { side, reason: err.to_string() });
            }
            return Ok(entry);
        }
    };
    let (r_est, est, flag_est) = analyse(params, q, e, nominal, Side::Estimated);
    let (r_true, truth, flag_true) = analyse(params, q, e, emitted, Side::True);
    entry.r_estimated = r_est;
    entry.r_true = r_true;
    entry.estimated = est;
    entry.truth = truth;
    entry.infeasible.extend(flag_est);
    entry.infeasible.extend(flag_true);
    Ok(entry)
}

/// Rates over total Alice-Bob distances, in input order.
pub fn tf_sweep_distance(params: &SystemParams, g: f64, lengths_km: &[f64]) -> Result<KeyRateReport<TfDecoyQuantities>> {
    let entries = lengths_km
        .par_iter()
        .map(|&l| tf_key_rate(&params.with_length(l)?, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(KeyRateReport { variable: SweepVariable::DistanceKm, entries })
}

/// Rates at a fixed distance over symmetric attack shifts `f_delta`, with
/// `g = 1 + 2 G(f_delta)`.
pub fn tf_sweep_f_delta(params: &SystemParams, f_deltas_mhz: &[f64], gains: &GainTable) -> Result<KeyRateReport<TfDecoyQuantities>> {
    let entries = f_deltas_mhz
        .par_iter()
        .map(|&fd| {
            let g = system_gain_factor(fd, fd, gains)?;
            let mut entry = tf_key_rate(params, g)?;
            entry.sweep_value = fd;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KeyRateReport { variable: SweepVariable::FDeltaMhz, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gain_anchors() {
        assert_eq!(gain_q(0.0, 0.5, 0.0), 0.0);
        assert_eq!(gain_q(1e3, 1.0, 0.0), 1.0);
        // first-order expansion eta*mu + 2 p_d at a long-haul operating point
        let (mu, eta, pd) = (0.4, 7.536e-7, 1e-8);
        let q = gain_q(mu, eta, pd);
        assert_relative_eq!(q, eta * mu + 2.0 * pd, max_relative = 1e-6);
    }

    #[test]
    fn phase_slice_error_m16() {
        // 40-digit evaluation of 1/2 - sin(2 pi / M) / (4 pi / M) at M = 16
        assert_relative_eq!(phase_slice_error(16), 0.012_752_320_797_783_677, max_relative = 1e-12);
    }

    #[test]
    fn qber_bracket_vanishes() {
        let e_m = phase_slice_error(16);
        let e = qber_e(0.4, 1e-3, 0.0, 0.5 - e_m, 16).unwrap();
        assert_relative_eq!(e, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn qber_operating_point_in_range() {
        let e = qber_e(0.4, 7.536e-7, 1e-8, 0.03, 16).unwrap();
        assert!(e > 0.0 && e < 0.5, "{e}");
    }

    #[test]
    fn qber_zero_gain_is_error() {
        assert!(matches!(qber_e(0.0, 0.5, 0.0, 0.03, 16), Err(Error::Infeasible(_))));
    }

    #[test]
    fn degenerate_decoys_rejected() {
        let r = decoy_bounds([0.1; 3], [0.01; 3], [0.4, 0.01, 0.01]);
        assert!(matches!(r, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn equal_decoy_gains_closed_form() {
        // Q1 = Q2 = q, mu1 = 2 mu2: Y0L and Y1L reduce to short expressions
        let (mu0, mu2) = (0.5, 0.05);
        let mu1 = 2.0 * mu2;
        let (q, q0) = (0.02, 0.025);
        let b = decoy_bounds([q0, q, q], [0.1, 0.1, 0.1], [mu0, mu1, mu2]).unwrap();
        let y0 = (2.0 * q * mu2.exp() - q * mu1.exp()).max(0.0);
        let y1 = mu0 / (mu0 * mu1 - mu0 * mu2 - mu1 * mu1 + mu2 * mu2)
            * (q * (mu1.exp() - mu2.exp()) - (mu1 * mu1 - mu2 * mu2) / (mu0 * mu0) * (q0 * mu0.exp() - y0));
        assert_relative_eq!(b.y0_l, y0, max_relative = 1e-13);
        assert_relative_eq!(b.y1_l, y1, max_relative = 1e-13);
    }

    #[test]
    fn no_attack_collapses() {
        let p = SystemParams::tf_default().with_length(300.0).unwrap();
        let r = tf_key_rate(&p, 1.0).unwrap();
        assert_eq!(r.r_estimated.to_bits(), r.r_true.to_bits());
        assert_eq!(r.estimated, r.truth);
        assert!(r.is_feasible());
        assert!(r.r_true > 0.0);
    }

    #[test]
    fn attack_overestimates() {
        let p = SystemParams::tf_default().with_length(300.0).unwrap();
        let r = tf_key_rate(&p, 1.087).unwrap();
        assert!(r.r_estimated > r.r_true);
        assert_eq!(r.estimated.q_mu, r.truth.q_mu);
    }

    #[test]
    fn rejects_g_below_one() {
        assert!(tf_key_rate(&SystemParams::tf_default(), 0.99).is_err());
        assert!(tf_key_rate(&SystemParams::tf_default(), f64::NAN).is_err());
    }

    #[test]
    fn sweep_keeps_order() {
        let p = SystemParams::tf_default();
        let ls: Vec<f64> = (0..20).map(|i| 30.0 * i as f64).collect();
        let rep = tf_sweep_distance(&p, 1.087, &ls).unwrap();
        let got: Vec<f64> = rep.entries.iter().map(|e| e.sweep_value).collect();
        assert_eq!(got, ls);
    }
}
