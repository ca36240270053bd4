//! Attacker parameters and the resulting mean-photon-number gain.

use crate::aom::{AomModel, AttenuationDelta, OperatingPoint};
use crate::error::{Error, Result};
use crate::interp::{PiecewiseLinear, Sample};

/// Largest reference-frequency step that keeps the victim's loop locked.
pub const LOCK_LIMIT_MHZ: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig {
    f_aom1_mhz: f64,
    f_aom2_mhz: f64,
    switch_rate_khz: f64,
}

impl AttackConfig {
    pub fn new(f_aom1_mhz: f64, f_aom2_mhz: f64, switch_rate_khz: f64) -> Result<Self> {
        let cfg = Self::unchecked(f_aom1_mhz, f_aom2_mhz, switch_rate_khz)?;
        if cfg.f_delta() > LOCK_LIMIT_MHZ {
            return Err(Error::BeyondLockLimit { f_delta_mhz: cfg.f_delta(), limit_mhz: LOCK_LIMIT_MHZ });
        }
        Ok(cfg)
    }

    /// Skips the lock-limit check, for probing the loop beyond its range.
    pub fn unchecked(f_aom1_mhz: f64, f_aom2_mhz: f64, switch_rate_khz: f64) -> Result<Self> {
        if !f_aom1_mhz.is_finite() || !f_aom2_mhz.is_finite() {
            return Err(Error::invalid("f_aom", "attacker modulation frequencies must be finite"));
        }
        if !(switch_rate_khz.is_finite() && switch_rate_khz > 0.0) {
            return Err(Error::invalid("switch_rate_khz", format!("must be > 0, got {switch_rate_khz}")));
        }
        Ok(Self { f_aom1_mhz, f_aom2_mhz, switch_rate_khz })
    }

    /// Attacker modulator toggling between 200 MHz and `200 - f_delta` MHz.
    pub fn from_delta(f_delta_mhz: f64, switch_rate_khz: f64) -> Result<Self> {
        Self::new(200.0, 200.0 - f_delta_mhz, switch_rate_khz)
    }

    pub fn f_aom1_mhz(&self) -> f64 {
        self.f_aom1_mhz
    }

    pub fn f_aom2_mhz(&self) -> f64 {
        self.f_aom2_mhz
    }

    pub fn switch_rate_khz(&self) -> f64 {
        self.switch_rate_khz
    }

    pub fn f_delta(&self) -> f64 {
        (self.f_aom1_mhz - self.f_aom2_mhz).abs()
    }

    /// Time between reference switches, us.
    pub fn dwell_us(&self) -> f64 {
        1e3 / self.switch_rate_khz
    }
}

/// Measured per-station gain against frequency shift, including the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    curve: PiecewiseLinear,
}

impl GainTable {
    /// Builds a table from `(f_delta, gain)` pairs. The origin `(0, 0)` is
    /// added when absent.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        if pts.first().is_none_or(|p| p.0 > 0.0) {
            pts.insert(0, (0.0, 0.0));
        }
        if let Some(&(f, _)) = pts.iter().find(|p| p.0 < 0.0) {
            return Err(Error::Table(format!("negative frequency shift {f} MHz")));
        }
        if let Some(&(f, _)) = pts.iter().find(|p| p.0 > LOCK_LIMIT_MHZ) {
            return Err(Error::Table(format!("knot at {f} MHz lies beyond the {LOCK_LIMIT_MHZ} MHz locking limit")));
        }
        if let Some(&(f, g)) = pts.iter().find(|p| p.1 < 0.0) {
            return Err(Error::Table(format!("negative gain {g} at {f} MHz")));
        }
        if pts[0] != (0.0, 0.0) {
            return Err(Error::Table(format!("gain at 0 MHz must be 0, got {}", pts[0].1)));
        }
        for w in pts.windows(2) {
            if w[1].1 < w[0].1 {
                return Err(Error::Table(format!(
                    "gains must be non-decreasing: {} at {} MHz after {} at {} MHz",
                    w[1].1, w[1].0, w[0].1, w[0].0
                )));
            }
        }
        Ok(Self { curve: PiecewiseLinear::new(&pts)? })
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.curve.knots().collect()
    }

    pub fn max_f_delta(&self) -> f64 {
        self.curve.x_max()
    }

    /// Interpolated gain with clamping beyond the last knot, for callers
    /// that probe past the lock limit deliberately.
    pub fn sample(&self, f_delta_mhz: f64) -> Sample {
        self.curve.sample(f_delta_mhz)
    }
}

impl Default for GainTable {
    fn default() -> Self {
        Self::new(&[(1.0, 0.0086), (3.0, 0.0163), (9.0, 0.0319), (20.0, 0.0404), (30.0, 0.0435)])
            .expect("valid default gains")
    }
}

/// Cycle-averaged fractional increase of one station's mean photon number.
pub fn per_station_gain(f_delta_mhz: f64, table: &GainTable) -> Result<f64> {
    if !(f_delta_mhz >= 0.0) {
        return Err(Error::Domain { function: "per_station_gain", value: f_delta_mhz });
    }
    if f_delta_mhz > LOCK_LIMIT_MHZ {
        return Err(Error::BeyondLockLimit { f_delta_mhz, limit_mhz: LOCK_LIMIT_MHZ });
    }
    Ok(table.curve.eval(f_delta_mhz))
}

/// `g = 1 + G_alice + G_bob`; the two station gains add.
pub fn system_gain_factor(f_delta_alice: f64, f_delta_bob: f64, table: &GainTable) -> Result<f64> {
    let ga = per_station_gain(f_delta_alice, table)?;
    let gb = per_station_gain(f_delta_bob, table)?;
    Ok(1.0 + (ga + gb))
}

/// Linear power gain implied by a loss change: `10^(-delta/10) - 1`.
pub fn linear_gain_from_db(delta_db: f64) -> f64 {
    10f64.powf(-delta_db / 10.0) - 1.0
}

/// AOM-level gain predicted by the physical model while the modulator sits
/// at the shifted frequency with the elevated drive voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsGain {
    pub delta_db: f64,
    pub gain: f64,
    pub clamped: bool,
}

/// Drive-voltage rise while the modulator sits `f_delta` below its working
/// frequency: the 1.61 V excursion measured at 20 MHz (8.95 V to 10.56 V),
/// scaled linearly in `f_delta`.
pub fn voltage_excursion(f_delta_mhz: f64) -> f64 {
    (10.56 - 8.95) * f_delta_mhz / 20.0
}

/// Loss change when an attack drags the modulator from `op` down by
/// `f_delta` with the accompanying voltage rise. Negative means brighter.
pub fn attack_delta_at(op: OperatingPoint, f_delta_mhz: f64, model: &AomModel) -> AttenuationDelta {
    model.combined_attenuation_delta(op.frequency_mhz, f_delta_mhz, op.voltage_v, op.voltage_v + voltage_excursion(f_delta_mhz))
}

/// Physics cross-check of the measured gain table from the unattacked
/// operating point.
pub fn gain_from_physics(f_delta_mhz: f64, model: &AomModel) -> Result<PhysicsGain> {
    if !(0.0..=LOCK_LIMIT_MHZ).contains(&f_delta_mhz) {
        return Err(Error::BeyondLockLimit { f_delta_mhz, limit_mhz: LOCK_LIMIT_MHZ });
    }
    let d = attack_delta_at(OperatingPoint::nominal(), f_delta_mhz, model);
    Ok(PhysicsGain { delta_db: d.total_db, gain: linear_gain_from_db(d.total_db), clamped: d.clamped })
}
