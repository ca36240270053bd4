//! Acousto-optic modulator insertion loss.
//!
//! Two views of the same device:
//!
//! * an analytic frequency response, `eta = sin^2((pi / lambda) * sqrt(M2 * L * Pa / (2 H)))`
//!   with ultrasonic power `Pa = (f / f0)^2 / Z`, plus a fixed excess loss;
//! * measured calibration tables: attenuation against driving voltage at a
//!   reference modulation frequency, and optionally attenuation against
//!   modulation frequency.
//!
//! The combined loss at `(f, v)` is separable: the voltage table sets the
//! level at the reference frequency and the frequency response adds its
//! change relative to that frequency. When a measured frequency table is
//! present it replaces the analytic curve for that change.

use crate::error::{Error, Result};
use crate::interp::{PiecewiseLinear, Sample};

/// Reported in place of an infinite loss when the diffraction efficiency is zero.
pub const DEFAULT_SATURATION_CAP_DB: f64 = 60.0;

/// Frequency at which the shipped default constants put the efficiency peak.
pub const DEFAULT_PEAK_FREQUENCY_MHZ: f64 = 195.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AomPhysics {
    pub wavelength_nm: f64,
    /// Acousto-optic figure of merit, s^3/kg.
    pub m2: f64,
    pub l_pt_m: f64,
    pub h_pt_m: f64,
    pub f_aom0_mhz: f64,
    pub z_m: f64,
    pub delta_aom_db: f64,
    pub p_in_mw: f64,
    pub saturation_cap_db: f64,
}

impl AomPhysics {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        wavelength_nm: f64,
        m2: f64,
        l_pt_m: f64,
        h_pt_m: f64,
        f_aom0_mhz: f64,
        z_m: f64,
        delta_aom_db: f64,
        p_in_mw: f64,
    ) -> Result<Self> {
        let p = Self {
            wavelength_nm,
            m2,
            l_pt_m,
            h_pt_m,
            f_aom0_mhz,
            z_m,
            delta_aom_db,
            p_in_mw,
            saturation_cap_db: DEFAULT_SATURATION_CAP_DB,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_saturation_cap(mut self, cap_db: f64) -> Result<Self> {
        self.saturation_cap_db = cap_db;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength_nm", self.wavelength_nm),
            ("m2", self.m2),
            ("l_pt_m", self.l_pt_m),
            ("h_pt_m", self.h_pt_m),
            ("f_aom0_mhz", self.f_aom0_mhz),
            ("z_m", self.z_m),
            ("p_in_mw", self.p_in_mw),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.delta_aom_db.is_finite() && self.delta_aom_db >= 0.0) {
            return Err(Error::invalid("delta_aom_db", format!("must be >= 0, got {}", self.delta_aom_db)));
        }
        if !(self.saturation_cap_db.is_finite() && self.saturation_cap_db > self.delta_aom_db) {
            return Err(Error::invalid(
                "saturation_cap_db",
                format!("must exceed delta_aom_db ({}), got {}", self.delta_aom_db, self.saturation_cap_db),
            ));
        }
        Ok(())
    }

    /// Relative acoustic impedance that puts the first efficiency maximum
    /// at `peak_mhz`, holding the other constants fixed.
    pub fn fitted_z_m(&self, peak_mhz: f64) -> f64 {
        let lambda_m = self.wavelength_nm * 1e-9;
        let rel = peak_mhz / self.f_aom0_mhz;
        // (pi / lambda) * sqrt(M2 L rel^2 / (2 H Z)) = pi / 2
        self.m2 * self.l_pt_m * rel * rel / (2.0 * self.h_pt_m * (lambda_m / 2.0).powi(2))
    }

    /// Phase argument of the sin^2 efficiency law.
    fn phase(&self, f_aom_mhz: f64) -> f64 {
        let lambda_m = self.wavelength_nm * 1e-9;
        let pa = ultrasonic_power(f_aom_mhz, self);
        std::f64::consts::PI / lambda_m * (self.m2 * self.l_pt_m * pa / (2.0 * self.h_pt_m)).sqrt()
    }
}

impl Default for AomPhysics {
    /// Measured constants (1550 nm, M2 = 34.7e-15 s^3/kg, 3.57 dB excess loss,
    /// 6.22 mW input) with fitted transducer geometry: L = 5 mm, H = 100 um,
    /// f0 = 200 MHz, and Z chosen so the efficiency peaks at 195 MHz.
    fn default() -> Self {
        let mut p = Self {
            wavelength_nm: 1550.0,
            m2: 34.7e-15,
            l_pt_m: 5e-3,
            h_pt_m: 100e-6,
            f_aom0_mhz: 200.0,
            z_m: 1.0,
            delta_aom_db: 3.57,
            p_in_mw: 6.22,
            saturation_cap_db: DEFAULT_SATURATION_CAP_DB,
        };
        p.z_m = p.fitted_z_m(DEFAULT_PEAK_FREQUENCY_MHZ);
        p
    }
}

/// `Pa = F^2 / Z` with `F = f / f0`.
pub fn ultrasonic_power(f_aom_mhz: f64, physics: &AomPhysics) -> f64 {
    let rel = f_aom_mhz / physics.f_aom0_mhz;
    rel * rel / physics.z_m
}

pub fn diffraction_efficiency(f_aom_mhz: f64, physics: &AomPhysics) -> f64 {
    let s = physics.phase(f_aom_mhz).sin();
    (s * s).clamp(0.0, 1.0)
}

/// Analytic insertion loss: `-10 log10(eta) + delta`, capped at the saturation value.
pub fn attenuation_vs_frequency(f_aom_mhz: f64, physics: &AomPhysics) -> f64 {
    let eta = diffraction_efficiency(f_aom_mhz, physics);
    if eta <= 0.0 {
        return physics.saturation_cap_db;
    }
    (-10.0 * eta.log10() + physics.delta_aom_db).min(physics.saturation_cap_db)
}

/// Attenuation against driving voltage at a fixed reference modulation frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageCalibrationTable {
    reference_frequency_mhz: f64,
    curve: PiecewiseLinear,
}

impl VoltageCalibrationTable {
    pub fn new(reference_frequency_mhz: f64, entries: &[(f64, f64)]) -> Result<Self> {
        if !(reference_frequency_mhz.is_finite() && reference_frequency_mhz >= 0.0) {
            return Err(Error::invalid(
                "reference_frequency_mhz",
                format!("must be finite and >= 0, got {reference_frequency_mhz}"),
            ));
        }
        if let Some((v, a)) = entries.iter().find(|(_, a)| *a < 0.0) {
            return Err(Error::Table(format!("negative attenuation {a} dB at {v} V")));
        }
        Ok(Self { reference_frequency_mhz, curve: PiecewiseLinear::new(entries)? })
    }

    pub fn reference_frequency_mhz(&self) -> f64 {
        self.reference_frequency_mhz
    }

    pub fn entries(&self) -> Vec<(f64, f64)> {
        self.curve.knots().collect()
    }

    pub fn voltage_range(&self) -> (f64, f64) {
        (self.curve.x_min(), self.curve.x_max())
    }

    pub(crate) fn curve(&self) -> &PiecewiseLinear {
        &self.curve
    }
}

impl Default for VoltageCalibrationTable {
    /// Four measured points at 200 MHz: 8.95 V is the unattacked operating
    /// voltage, 10.56 V sits 1.02 dB below it, 8.68 V 0.14 dB above it, and
    /// 15 V gives the 3.59 dB minimum. The absolute level at 8.95 V (5.94 dB)
    /// is an assumed value; only the differences were measured.
    fn default() -> Self {
        let base = 5.94;
        Self::new(200.0, &[(8.68, base + 0.14), (8.95, base), (10.56, base - 1.02), (15.0, 3.59)])
            .expect("valid default table")
    }
}

/// Interpolated loss; `clamped` warns that `v` lay outside the table.
pub fn attenuation_vs_voltage(v: f64, table: &VoltageCalibrationTable) -> Sample {
    table.curve.sample(v)
}

/// Measured attenuation against modulation frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponseTable {
    curve: PiecewiseLinear,
}

impl FrequencyResponseTable {
    pub fn new(entries: &[(f64, f64)]) -> Result<Self> {
        if let Some((f, a)) = entries.iter().find(|(_, a)| *a < 0.0) {
            return Err(Error::Table(format!("negative attenuation {a} dB at {f} MHz")));
        }
        Ok(Self { curve: PiecewiseLinear::new(entries)? })
    }

    pub fn entries(&self) -> Vec<(f64, f64)> {
        self.curve.knots().collect()
    }

    pub fn sample(&self, f_mhz: f64) -> Sample {
        self.curve.sample(f_mhz)
    }
}

impl Default for FrequencyResponseTable {
    /// 3.57 dB minimum at 195 MHz, 3.59 dB at 200 MHz (the voltage sweep's
    /// minimum at the same drive level) and 0.69 dB more at 180 MHz.
    fn default() -> Self {
        Self::new(&[(180.0, 4.28), (195.0, 3.57), (200.0, 3.59)]).expect("valid default table")
    }
}

/// A drive setting of the modulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub frequency_mhz: f64,
    pub voltage_v: f64,
}

impl OperatingPoint {
    /// Unattacked factory setting: 200 MHz carrier, 8.95 V drive.
    pub fn nominal() -> Self {
        Self { frequency_mhz: 200.0, voltage_v: 8.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationSample {
    pub db: f64,
    pub clamped: bool,
}

/// Loss change when the modulator moves from `(f_center, v_before)` to
/// `(f_center - f_delta, v_after)`. Negative means less loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationDelta {
    pub frequency_db: f64,
    pub voltage_db: f64,
    pub total_db: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AomModel {
    pub physics: AomPhysics,
    pub voltage_table: VoltageCalibrationTable,
    pub frequency_table: Option<FrequencyResponseTable>,
}

impl Default for AomModel {
    fn default() -> Self {
        Self {
            physics: AomPhysics::default(),
            voltage_table: VoltageCalibrationTable::default(),
            frequency_table: Some(FrequencyResponseTable::default()),
        }
    }
}

impl AomModel {
    /// Model driven by the analytic frequency response only.
    pub fn analytic(physics: AomPhysics, voltage_table: VoltageCalibrationTable) -> Self {
        Self { physics, voltage_table, frequency_table: None }
    }

    /// Loss against frequency from the measured table when available,
    /// otherwise from the analytic curve.
    pub fn frequency_response(&self, f_mhz: f64) -> AttenuationSample {
        match &self.frequency_table {
            Some(t) => {
                let s = t.sample(f_mhz);
                AttenuationSample { db: s.value, clamped: s.clamped }
            }
            None => AttenuationSample { db: attenuation_vs_frequency(f_mhz, &self.physics), clamped: false },
        }
    }

    pub fn attenuation(&self, f_mhz: f64, v: f64) -> AttenuationSample {
        let volt = attenuation_vs_voltage(v, &self.voltage_table);
        let here = self.frequency_response(f_mhz);
        let reference = self.frequency_response(self.voltage_table.reference_frequency_mhz);
        AttenuationSample {
            db: volt.value + (here.db - reference.db),
            clamped: volt.clamped || here.clamped,
        }
    }

    pub fn output_power_mw(&self, f_mhz: f64, v: f64) -> f64 {
        self.physics.p_in_mw * 10f64.powf(-self.attenuation(f_mhz, v).db / 10.0)
    }

    pub fn combined_attenuation_delta(&self, f_center_mhz: f64, f_delta_mhz: f64, v_before: f64, v_after: f64) -> AttenuationDelta {
        let f_center = self.frequency_response(f_center_mhz);
        let f_shifted = self.frequency_response(f_center_mhz - f_delta_mhz);
        let vb = attenuation_vs_voltage(v_before, &self.voltage_table);
        let va = attenuation_vs_voltage(v_after, &self.voltage_table);
        let frequency_db = f_shifted.db - f_center.db;
        let voltage_db = va.value - vb.value;
        AttenuationDelta {
            frequency_db,
            voltage_db,
            total_db: frequency_db + voltage_db,
            clamped: f_center.clamped || f_shifted.clamped || vb.clamped || va.clamped,
        }
    }
}

/// Combined change at the voltage table's reference frequency, shifted down by `f_delta`.
pub fn combined_attenuation_delta(f_delta_mhz: f64, v_before: f64, v_after: f64, model: &AomModel) -> AttenuationDelta {
    model.combined_attenuation_delta(model.voltage_table.reference_frequency_mhz, f_delta_mhz, v_before, v_after)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub v_o: f64,
    pub f_o: f64,
    pub attenuation_db: f64,
}

impl Calibration {
    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint { frequency_mhz: self.f_o, voltage_v: self.v_o }
    }
}

/// Lowest `(loss, x)` pair; equal losses resolve to the lower `x`.
fn argmin(grid: &[f64], loss: impl Fn(f64) -> f64) -> (f64, f64) {
    grid.iter()
        .map(|&x| (loss(x), x))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .map(|(l, x)| (x, l))
        .expect("grid checked non-empty")
}

/// Two-step loss minimisation: scan the drive voltage at the table's
/// reference frequency, then scan the modulation frequency at the chosen
/// voltage.
pub fn calibrate(model: &AomModel, v_grid: &[f64], f_grid: &[f64]) -> Result<Calibration> {
    if v_grid.is_empty() {
        return Err(Error::EmptyGrid("voltage grid"));
    }
    if f_grid.is_empty() {
        return Err(Error::EmptyGrid("frequency grid"));
    }
    if let Some(x) = v_grid.iter().chain(f_grid).find(|x| !x.is_finite()) {
        return Err(Error::invalid("grid", format!("non-finite grid value {x}")));
    }
    let f_ref = model.voltage_table.reference_frequency_mhz;
    let (v_o, _) = argmin(v_grid, |v| model.attenuation(f_ref, v).db);
    let (f_o, attenuation_db) = argmin(f_grid, |f| model.attenuation(f, v_o).db);
    Ok(Calibration { v_o, f_o, attenuation_db })
}

/// Inclusive arithmetic grid `start, start + step, ...` up to `stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return vec![start];
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ultrasonic_power_anchors() {
        let mut p = AomPhysics::default();
        assert_eq!(ultrasonic_power(0.0, &p), 0.0);
        p.z_m = 1.0;
        assert_eq!(ultrasonic_power(p.f_aom0_mhz, &p), 1.0);
        p.z_m = 2.0;
        assert_eq!(ultrasonic_power(2.0 * p.f_aom0_mhz, &p), 2.0);
    }

    #[test]
    fn efficiency_anchors() {
        let p = AomPhysics::default();
        assert_eq!(diffraction_efficiency(0.0, &p), 0.0);
        assert_relative_eq!(diffraction_efficiency(195.0, &p), 1.0, max_relative = 1e-14);
        assert_eq!(attenuation_vs_frequency(0.0, &p), DEFAULT_SATURATION_CAP_DB);
        assert_relative_eq!(attenuation_vs_frequency(195.0, &p), 3.57, max_relative = 1e-12);
    }

    #[test]
    fn low_frequency_dynamic_range_exceeds_50_db() {
        let p = AomPhysics::default();
        assert!(attenuation_vs_frequency(0.2, &p) > 50.0);
        assert!(attenuation_vs_frequency(240.0, &p) < 10.0);
    }

    #[test]
    fn voltage_table_measured_points() {
        let t = VoltageCalibrationTable::default();
        assert_eq!(attenuation_vs_voltage(15.0, &t).value, 3.59);
        let base = attenuation_vs_voltage(8.95, &t).value;
        assert_relative_eq!(attenuation_vs_voltage(10.56, &t).value - base, -1.02, epsilon = 1e-12);
        assert_relative_eq!(attenuation_vs_voltage(8.68, &t).value - base, 0.14, epsilon = 1e-12);
        let s = attenuation_vs_voltage(20.0, &t);
        assert!(s.clamped);
        assert_eq!(s.value, 3.59);
    }

    #[test]
    fn combined_delta_at_20_mhz() {
        let m = AomModel::default();
        let d = combined_attenuation_delta(20.0, 8.95, 10.56, &m);
        assert_relative_eq!(d.frequency_db, 0.69, epsilon = 1e-12);
        assert_relative_eq!(d.voltage_db, -1.02, epsilon = 1e-12);
        assert_relative_eq!(d.total_db, -0.33, epsilon = 1e-12);
        let none = combined_attenuation_delta(0.0, 8.95, 8.95, &m);
        assert_eq!(none.total_db, 0.0);
    }

    #[test]
    fn calibrate_finds_measured_minima() {
        let m = AomModel::default();
        let c = calibrate(&m, &grid(8.0, 16.0, 0.01), &grid(150.0, 240.0, 0.5)).unwrap();
        assert_relative_eq!(c.v_o, 15.0, epsilon = 1e-9);
        assert_relative_eq!(c.f_o, 195.0, epsilon = 1e-9);
        let single = calibrate(&m, &[9.0], &[200.0]).unwrap();
        assert_eq!((single.v_o, single.f_o), (9.0, 200.0));
        assert!(matches!(calibrate(&m, &[], &[200.0]), Err(Error::EmptyGrid(_))));
        assert!(matches!(calibrate(&m, &[9.0], &[]), Err(Error::EmptyGrid(_))));
    }

    #[test]
    fn calibrate_ties_go_low() {
        // everything above 15 V clamps to the 15 V loss
        let m = AomModel::default();
        let c = calibrate(&m, &[16.0, 15.0, 18.0], &[200.0]).unwrap();
        assert_eq!(c.v_o, 15.0);
    }

    #[test]
    fn physics_rejects_nonpositive() {
        assert!(AomPhysics::new(1550.0, 34.7e-15, 5e-3, 1e-4, 200.0, 0.0, 3.57, 6.22).is_err());
        assert!(AomPhysics::new(1550.0, 34.7e-15, 5e-3, 1e-4, 200.0, 1.0, -0.1, 6.22).is_err());
        assert!(AomPhysics::default().with_saturation_cap(3.0).is_err());
    }

    #[test]
    fn grid_inclusive() {
        assert_eq!(grid(0.0, 1.0, 0.5), vec![0.0, 0.5, 1.0]);
        assert_eq!(grid(1.0, 1.0, 0.5), vec![1.0]);
        assert_eq!(grid(0.0, 0.3, 0.1).len(), 4);
    }
}
