//! Shared channel, detector, protocol and intensity parameters.
//!
//! Unit conventions used throughout the crate: distances in km, fibre
//! attenuation in dB/km, frequencies in MHz, optical power in mW, device
//! attenuation in dB. Every constructor validates its invariants; once built,
//! a value is immutable.

use crate::error::{Error, Result};

fn require_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{v} is not finite")))
    }
}

/// Three mean photon numbers ordered signal > decoy 1 > decoy 2 > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensitySettings {
    mu0: f64,
    mu1: f64,
    mu2: f64,
}

impl IntensitySettings {
    pub fn new(mu0: f64, mu1: f64, mu2: f64) -> Result<Self> {
        require_finite("mu0", mu0)?;
        require_finite("mu1", mu1)?;
        require_finite("mu2", mu2)?;
        if mu2 <= 0.0 {
            return Err(Error::invalid("mu2", format!("must be > 0, got {mu2}")));
        }
        if mu1 <= mu2 {
            return Err(Error::invalid("mu1", format!("ordering violated: mu1 = {mu1} must exceed mu2 = {mu2}")));
        }
        if mu0 <= mu1 {
            return Err(Error::invalid("mu0", format!("ordering violated: mu0 = {mu0} must exceed mu1 = {mu1}")));
        }
        Ok(Self { mu0, mu1, mu2 })
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.mu0, self.mu1, self.mu2]
    }

    /// Every intensity multiplied by `g`. Ordering is preserved for `g > 0`.
    pub fn scaled(&self, g: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::invalid("g", format!("scale factor must be finite and > 0, got {g}")));
        }
        Self::new(g * self.mu0, g * self.mu1, g * self.mu2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    alpha: f64,
    length_km: f64,
    eta_det: f64,
    p_dark: f64,
    e_opt: f64,
}

impl ChannelParams {
    pub fn new(alpha: f64, length_km: f64, eta_det: f64, p_dark: f64, e_opt: f64) -> Result<Self> {
        for (n, v) in [
            ("alpha", alpha),
            ("length_km", length_km),
            ("eta_det", eta_det),
            ("p_dark", p_dark),
            ("e_opt", e_opt),
        ] {
            require_finite(n, v)?;
        }
        if alpha <= 0.0 {
            return Err(Error::invalid("alpha", format!("must be > 0 dB/km, got {alpha}")));
        }
        if length_km < 0.0 {
            return Err(Error::invalid("length_km", format!("must be >= 0, got {length_km}")));
        }
        if !(eta_det > 0.0 && eta_det <= 1.0) {
            return Err(Error::invalid("eta_det", format!("must lie in (0, 1], got {eta_det}")));
        }
        if !(0.0..1.0).contains(&p_dark) {
            return Err(Error::invalid("p_dark", format!("must lie in [0, 1), got {p_dark}")));
        }
        if !(0.0..0.5).contains(&e_opt) {
            return Err(Error::invalid("e_opt", format!("must lie in [0, 0.5), got {e_opt}")));
        }
        Ok(Self { alpha, length_km, eta_det, p_dark, e_opt })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn length_km(&self) -> f64 {
        self.length_km
    }

    pub fn eta_det(&self) -> f64 {
        self.eta_det
    }

    pub fn p_dark(&self) -> f64 {
        self.p_dark
    }

    pub fn e_opt(&self) -> f64 {
        self.e_opt
    }

    pub fn with_length(&self, length_km: f64) -> Result<Self> {
        Self::new(self.alpha, length_km, self.eta_det, self.p_dark, self.e_opt)
    }

    pub fn with_p_dark(&self, p_dark: f64) -> Result<Self> {
        Self::new(self.alpha, self.length_km, self.eta_det, p_dark, self.e_opt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    duty_cycle: f64,
    phase_slices: u32,
    f_ec: f64,
    n_total: f64,
    gamma: f64,
    t_delta: Option<f64>,
}

impl ProtocolParams {
    /// `t_delta = None` selects the built-in detector-rate model of the SNS
    /// module; `Some` pins it to a fixed value.
    pub fn new(
        duty_cycle: f64,
        phase_slices: u32,
        f_ec: f64,
        n_total: f64,
        gamma: f64,
        t_delta: Option<f64>,
    ) -> Result<Self> {
        for (n, v) in [("duty_cycle", duty_cycle), ("f_ec", f_ec), ("n_total", n_total), ("gamma", gamma)] {
            require_finite(n, v)?;
        }
        if !(duty_cycle > 0.0 && duty_cycle <= 1.0) {
            return Err(Error::invalid("duty_cycle", format!("must lie in (0, 1], got {duty_cycle}")));
        }
        if phase_slices < 2 {
            return Err(Error::invalid("phase_slices", format!("must be >= 2, got {phase_slices}")));
        }
        if f_ec < 1.0 {
            return Err(Error::invalid("f_ec", format!("must be >= 1, got {f_ec}")));
        }
        if n_total <= 0.0 {
            return Err(Error::invalid("n_total", format!("must be > 0, got {n_total}")));
        }
        if gamma < 0.0 {
            return Err(Error::invalid("gamma", format!("must be >= 0, got {gamma}")));
        }
        if let Some(t) = t_delta {
            require_finite("t_delta", t)?;
            if t < 0.0 {
                return Err(Error::invalid("t_delta", format!("must be >= 0, got {t}")));
            }
        }
        Ok(Self { duty_cycle, phase_slices, f_ec, n_total, gamma, t_delta })
    }

    pub fn duty_cycle(&self) -> f64 {
        self.duty_cycle
    }

    pub fn phase_slices(&self) -> u32 {
        self.phase_slices
    }

    pub fn f_ec(&self) -> f64 {
        self.f_ec
    }

    pub fn n_total(&self) -> f64 {
        self.n_total
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_delta(&self) -> Option<f64> {
        self.t_delta
    }
}

/// Everything a key-rate evaluation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub intensities: IntensitySettings,
    pub channel: ChannelParams,
    pub protocol: ProtocolParams,
}

impl SystemParams {
    pub fn with_length(&self, length_km: f64) -> Result<Self> {
        Ok(Self { channel: self.channel.with_length(length_km)?, ..*self })
    }

    /// TF QKD defaults: three intensities 0.4 / 1e-2 / 1e-4, 0.2 dB/km fibre,
    /// 30 % detection, 3 % optical error, d = 0.5, M = 16, f = 1.16.
    /// The dark-count probability (1e-8) is a configurable default.
    pub fn tf_default() -> Self {
        Self {
            intensities: IntensitySettings::new(0.4, 1e-2, 1e-4).expect("valid defaults"),
            channel: ChannelParams::new(0.2, 0.0, 0.3, 1e-8, 0.03).expect("valid defaults"),
            protocol: ProtocolParams::new(0.5, 16, 1.16, 1e10, 0.0, None).expect("valid defaults"),
        }
    }

    /// SNS defaults: N = 5.4e14, P_d = 1.4e-11, f = 1.16, 0.157 dB/km,
    /// 60 % detection. Intensities are ordered signal > strong decoy > weak decoy.
    pub fn sns_default() -> Self {
        Self {
            intensities: IntensitySettings::new(0.4, 0.2, 0.05).expect("valid defaults"),
            channel: ChannelParams::new(0.157, 0.0, 0.6, 1.4e-11, 0.03).expect("valid defaults"),
            protocol: ProtocolParams::new(0.5, 16, 1.16, 5.4e14, 0.0, None).expect("valid defaults"),
        }
    }
}

/// Binary Shannon entropy in bits, with H(0) = H(1) = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain { function: "binary_entropy", value: x });
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Transmittance of one arm (half the Alice-Bob distance) including the
/// detector efficiency.
pub fn single_arm_transmittance(p: &ChannelParams) -> f64 {
    p.eta_det * 10f64.powf(-(p.alpha * p.length_km / 2.0) / 10.0)
}

/// Transmittance over the full Alice-Bob distance including the detector.
pub fn total_transmittance(p: &ChannelParams) -> f64 {
    p.eta_det * 10f64.powf(-(p.alpha * p.length_km) / 10.0)
}
