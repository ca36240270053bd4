//! Fixed-step simulation of one station's optical phase-locked loop under a
//! wavelength-switching reference.
//!
//! Frequencies are offsets in MHz. The attacker toggles the reference between
//! `f_aom1` and `f_aom2` every `1/r_s`; the required correction `c` is 0 in
//! the first state and `f_delta` in the second. The beat note seen by the
//! heterodyne detector is `het_center + c - pzt`: the AOM acts on the light
//! sent onwards, the PZT on the laser itself.
//!
//! After each reference switch the FLC waits a delay drawn uniformly from
//! `[flc_response_min, flc_response_max]`, then commands the AOM to
//! `aom_center - (c - pzt)`. While locked the PZT slowly takes the AOM offset
//! over. Moving the AOM off centre raises its drive voltage (high phase);
//! moving back lowers it briefly below the base (low phase) before it
//! settles. When switches come faster than the slowest FLC response, each
//! command is delivered only with `delivery_probability`.
//!
//! Drive voltages come from inverting the voltage table: the high level is
//! the voltage at which the shifted AOM transmits `1 + 2 G(f_delta)` times
//! the unattacked power, so that with half the cycle spent shifted the
//! cycle-averaged excess reproduces the measured per-station gain `G`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aom::AomModel;
use crate::attack::{AttackConfig, GainTable};
use crate::error::{Error, Result};

/// Loss excess of the low-voltage phase at `f_delta = 20` MHz, scaled
/// linearly in `f_delta`.
const LOW_PHASE_PENALTY_DB_AT_20: f64 = 0.14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpllConfig {
    pub het_center_mhz: f64,
    /// Half-width of the lock range around `het_center_mhz`.
    pub lock_bandwidth_mhz: f64,
    pub lock_time_us: f64,
    pub flc_response_min_us: f64,
    pub flc_response_max_us: f64,
    pub pzt_handoff_rate_mhz_per_ms: f64,
    pub aom_center_mhz: f64,
    pub min_beat_power_dbm: f64,
    /// Total heterodyne beat power shared among the spectral peaks.
    pub beat_power_dbm: f64,
    pub timestep_us: f64,
    /// Probability that a command reaches the AOM when switching outpaces
    /// the FLC.
    pub delivery_probability: f64,
    /// Duration of the low-voltage phase after returning to centre.
    pub voltage_release_us: f64,
    pub base_voltage_v: f64,
    pub spectrum_resolution_mhz: f64,
    pub stability_tolerance_mhz: f64,
}

impl Default for OpllConfig {
    fn default() -> Self {
        Self {
            het_center_mhz: 112.0,
            lock_bandwidth_mhz: 30.0,
            lock_time_us: 0.2,
            flc_response_min_us: 3.0,
            flc_response_max_us: 10.0,
            pzt_handoff_rate_mhz_per_ms: 0.3,
            aom_center_mhz: 200.0,
            min_beat_power_dbm: -30.0,
            beat_power_dbm: -9.14,
            timestep_us: 0.05,
            delivery_probability: 0.5,
            voltage_release_us: 0.75,
            base_voltage_v: 8.95,
            spectrum_resolution_mhz: 1.0,
            stability_tolerance_mhz: 1.0,
        }
    }
}

impl OpllConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("het_center_mhz", self.het_center_mhz),
            ("lock_bandwidth_mhz", self.lock_bandwidth_mhz),
            ("lock_time_us", self.lock_time_us),
            ("flc_response_min_us", self.flc_response_min_us),
            ("flc_response_max_us", self.flc_response_max_us),
            ("pzt_handoff_rate_mhz_per_ms", self.pzt_handoff_rate_mhz_per_ms),
            ("aom_center_mhz", self.aom_center_mhz),
            ("min_beat_power_dbm", self.min_beat_power_dbm),
            ("beat_power_dbm", self.beat_power_dbm),
            ("timestep_us", self.timestep_us),
            ("delivery_probability", self.delivery_probability),
            ("voltage_release_us", self.voltage_release_us),
            ("base_voltage_v", self.base_voltage_v),
            ("spectrum_resolution_mhz", self.spectrum_resolution_mhz),
            ("stability_tolerance_mhz", self.stability_tolerance_mhz),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("{v} is not finite")));
            }
        }
        let positive = [
            ("lock_bandwidth_mhz", self.lock_bandwidth_mhz),
            ("timestep_us", self.timestep_us),
            ("flc_response_min_us", self.flc_response_min_us),
            ("spectrum_resolution_mhz", self.spectrum_resolution_mhz),
            ("stability_tolerance_mhz", self.stability_tolerance_mhz),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("lock_time_us", self.lock_time_us),
            ("pzt_handoff_rate_mhz_per_ms", self.pzt_handoff_rate_mhz_per_ms),
            ("voltage_release_us", self.voltage_release_us),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        if self.flc_response_min_us > self.flc_response_max_us {
            return Err(Error::invalid(
                "flc_response_min_us",
                format!("{} exceeds flc_response_max_us = {}", self.flc_response_min_us, self.flc_response_max_us),
            ));
        }
        if self.timestep_us > self.flc_response_min_us / 2.0 {
            return Err(Error::invalid(
                "timestep_us",
                format!("{} exceeds half the minimum FLC response ({} us)", self.timestep_us, self.flc_response_min_us),
            ));
        }
        if !(0.0..=1.0).contains(&self.delivery_probability) {
            return Err(Error::invalid("delivery_probability", format!("must lie in [0, 1], got {}", self.delivery_probability)));
        }
        Ok(())
    }
}

/// Drive voltages used while the AOM sits off centre and right after it
/// returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveLevels {
    pub base_v: f64,
    pub high_v: f64,
    pub low_v: f64,
    /// The voltage table could not reach a target; the nearest end was used.
    pub clamped: bool,
}

pub fn drive_levels(config: &OpllConfig, model: &AomModel, gains: &GainTable, f_delta_mhz: f64) -> DriveLevels {
    let base_v = config.base_voltage_v;
    if f_delta_mhz == 0.0 {
        return DriveLevels { base_v, high_v: base_v, low_v: base_v, clamped: false };
    }
    let curve = model.voltage_table.curve();
    let reference = model.voltage_table.reference_frequency_mhz();
    let freq_penalty = model.frequency_response(config.aom_center_mhz - f_delta_mhz).db - model.frequency_response(reference).db;
    let center_penalty = model.frequency_response(config.aom_center_mhz).db - model.frequency_response(reference).db;
    let base_db = curve.eval(base_v);
    let gain = gains.sample(f_delta_mhz).value;

    let high_target = base_db + center_penalty - freq_penalty - 10.0 * (1.0 + 2.0 * gain).log10();
    let high = curve.solve_from(high_target, base_v, true);
    let low_target = base_db + LOW_PHASE_PENALTY_DB_AT_20 * f_delta_mhz / 20.0;
    let low = curve.solve_from(low_target, base_v, false);
    DriveLevels { base_v, high_v: high.value, low_v: low.value, clamped: high.clamped || low.clamped }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t_us: f64,
    pub locked: bool,
    pub aom_cmd_mhz: f64,
    pub pzt_mhz: f64,
    pub beat_mhz: f64,
    pub drive_v: f64,
    pub power_mw: f64,
}

impl TraceSample {
    /// Total frequency correction applied to the outgoing light.
    pub fn applied_offset_mhz(&self, aom_center_mhz: f64) -> f64 {
        (aom_center_mhz - self.aom_cmd_mhz) + self.pzt_mhz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpllTrace {
    pub config: OpllConfig,
    pub drive: DriveLevels,
    pub samples: Vec<TraceSample>,
}

impl OpllTrace {
    pub fn duration_us(&self) -> f64 {
        self.samples.len() as f64 * self.config.timestep_us
    }

    pub fn mean_power_mw(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.power_mw).sum::<f64>() / self.samples.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Base,
    High,
    Low { until_us: f64 },
}

/// Simulates `duration_us` of loop operation under `attack`.
pub fn run_opll(
    config: &OpllConfig,
    attack: &AttackConfig,
    model: &AomModel,
    gains: &GainTable,
    duration_us: f64,
    seed: u64,
) -> Result<OpllTrace> {
    run_opll_until(config, attack, model, gains, duration_us, seed, None)
}

/// As [`run_opll`], with the reference frozen from `halt_at_us` onwards.
pub fn run_opll_until(
    config: &OpllConfig,
    attack: &AttackConfig,
    model: &AomModel,
    gains: &GainTable,
    duration_us: f64,
    seed: u64,
    halt_at_us: Option<f64>,
) -> Result<OpllTrace> {
    config.validate()?;
    if !(duration_us.is_finite() && duration_us > 0.0) {
        return Err(Error::invalid("duration_us", format!("must be > 0, got {duration_us}")));
    }
    let dt = config.timestep_us;
    let steps = (duration_us / dt).round() as usize;
    let f_delta = attack.f_delta();
    let dwell = attack.dwell_us();
    let drive = drive_levels(config, model, gains, f_delta);
    let lossy_delivery = dwell < config.flc_response_max_us;
    let beat_ok = config.beat_power_dbm >= config.min_beat_power_dbm;
    let halt = halt_at_us.unwrap_or(f64::INFINITY);
    let handoff_per_step = config.pzt_handoff_rate_mhz_per_ms / 1e3 * dt;
    // tolerance for comparing accumulated times against event instants
    let eps = dt * 1e-6;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut correction = 0.0;
    let mut next_switch = dwell;
    let mut aom_offset = 0.0;
    let mut pzt = 0.0;
    let mut phase = Phase::Base;
    let mut locked = beat_ok;
    let mut in_range_since = 0.0;
    let mut pending: Vec<f64> = Vec::new();
    let mut samples = Vec::with_capacity(steps);

    for i in 0..steps {
        let t = i as f64 * dt;

        if t + eps >= next_switch && next_switch <= halt {
            correction = if correction == 0.0 { f_delta } else { 0.0 };
            next_switch += dwell;
            let delay = rng.random_range(config.flc_response_min_us..=config.flc_response_max_us);
            let delivered = !lossy_delivery || rng.random_bool(config.delivery_probability);
            if delivered && locked {
                pending.push(t + delay);
            }
        }

        let in_range = beat_ok && (correction - pzt).abs() <= config.lock_bandwidth_mhz;
        if !in_range {
            locked = false;
            in_range_since = t;
            pending.clear();
        } else if !locked && t - in_range_since + eps >= config.lock_time_us {
            locked = true;
        }

        if locked {
            let due = pending.iter().filter(|&&at| t + eps >= at).count();
            pending.retain(|&at| t + eps < at);
            if due > 0 {
                let target = correction - pzt;
                if (target - aom_offset).abs() > 1e-9 {
                    phase = if target.abs() > aom_offset.abs() {
                        Phase::High
                    } else {
                        Phase::Low { until_us: t + config.voltage_release_us }
                    };
                }
                aom_offset = target;
            }
            let step = aom_offset.abs().min(handoff_per_step);
            if step > 0.0 {
                let s = step.copysign(aom_offset);
                aom_offset -= s;
                pzt += s;
            }
        }

        if let Phase::Low { until_us } = phase {
            if t + eps >= until_us {
                phase = Phase::Base;
            }
        }
        let drive_v = match phase {
            Phase::Base => drive.base_v,
            Phase::High => drive.high_v,
            Phase::Low { .. } => drive.low_v,
        };
        let aom_cmd = config.aom_center_mhz - aom_offset;
        samples.push(TraceSample {
            t_us: t,
            locked,
            aom_cmd_mhz: aom_cmd,
            pzt_mhz: pzt,
            beat_mhz: config.het_center_mhz + correction - pzt,
            drive_v,
            power_mw: model.output_power_mw(aom_cmd, drive_v),
        });
    }
    Ok(OpllTrace { config: config.clone(), drive, samples })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub frequency_mhz: f64,
    pub power_dbm: f64,
    /// Fraction of the window spent at this beat frequency.
    pub occupancy: f64,
}

/// Beat-note peaks over `[start_us, end_us)`, binned to the configured
/// resolution. The total beat power is split by occupancy.
pub fn heterodyne_spectrum(trace: &OpllTrace, start_us: f64, end_us: f64) -> Result<Vec<SpectralPeak>> {
    let res = trace.config.spectrum_resolution_mhz;
    let mut bins: Vec<(i64, usize)> = Vec::new();
    let mut total = 0usize;
    for s in trace.samples.iter().filter(|s| s.t_us >= start_us && s.t_us < end_us) {
        let bin = (s.beat_mhz / res).round() as i64;
        match bins.binary_search_by_key(&bin, |b| b.0) {
            Ok(i) => bins[i].1 += 1,
            Err(i) => bins.insert(i, (bin, 1)),
        }
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptyWindow { start_us, end_us });
    }
    Ok(bins
        .into_iter()
        .map(|(bin, count)| {
            let occupancy = count as f64 / total as f64;
            SpectralPeak {
                frequency_mhz: bin as f64 * res,
                power_dbm: trace.config.beat_power_dbm + 10.0 * occupancy.log10(),
                occupancy,
            }
        })
        .collect())
}

/// Fraction of timesteps in which both loops are locked and their applied
/// corrections agree within the tolerance of `a`'s config.
pub fn interference_stability(a: &OpllTrace, b: &OpllTrace) -> Result<f64> {
    if a.samples.len() != b.samples.len() {
        return Err(Error::LengthMismatch { left: a.samples.len(), right: b.samples.len() });
    }
    if a.samples.is_empty() {
        return Err(Error::EmptyWindow { start_us: 0.0, end_us: 0.0 });
    }
    let tol = a.config.stability_tolerance_mhz;
    let (ca, cb) = (a.config.aom_center_mhz, b.config.aom_center_mhz);
    let good = a
        .samples
        .iter()
        .zip(&b.samples)
        .filter(|(x, y)| x.locked && y.locked && (x.applied_offset_mhz(ca) - y.applied_offset_mhz(cb)).abs() < tol)
        .count();
    Ok(good as f64 / a.samples.len() as f64)
}

/// Alice's and Bob's loops under the same attack with independent FLC delays.
pub fn simulate_pair(
    config: &OpllConfig,
    attack: &AttackConfig,
    model: &AomModel,
    gains: &GainTable,
    duration_us: f64,
    seed: u64,
) -> Result<(OpllTrace, OpllTrace)> {
    let alice = run_opll(config, attack, model, gains, duration_us, seed)?;
    let bob = run_opll(config, attack, model, gains, duration_us, seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?;
    Ok((alice, bob))
}
