//! Secure-key-rate lower bounds evaluated twice per point: once as the
//! legitimate parties compute it (nominal intensities) and once with the
//! intensities the attacked sources actually emit.
//!
//! In both evaluations the observed gains, error rates and counting rates
//! are generated from the attacked intensities `mu' = g * mu`; the two
//! analyses differ only in which intensities enter the decoy estimators and
//! the rate formula.

pub mod sns;
pub mod tf;

use std::fmt;

use crate::error::{Error, Result};

/// Repeaterless secret-key capacity `-log2(1 - eta)`.
pub fn plob_bound(eta_total: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta_total) {
        return Err(Error::Domain { function: "plob_bound", value: eta_total });
    }
    Ok(-(-eta_total).ln_1p() / std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    DistanceKm,
    FDeltaMhz,
}

impl SweepVariable {
    pub fn column(&self) -> &'static str {
        match self {
            SweepVariable::DistanceKm => "L_km",
            SweepVariable::FDeltaMhz => "f_delta_mhz",
        }
    }
}

/// Which side of the dual evaluation a diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Estimated,
    True,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Estimated => "estimated",
            Side::True => "true",
        })
    }
}

/// Raised when a bound could not be formed; the affected rate is reported as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Infeasibility {
    pub side: Side,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateEntry<Q> {
    pub sweep_value: f64,
    pub g: f64,
    pub r_estimated: f64,
    pub r_true: f64,
    pub estimated: Q,
    pub truth: Q,
    pub infeasible: Vec<Infeasibility>,
}

impl<Q> KeyRateEntry<Q> {
    pub fn is_feasible(&self) -> bool {
        self.infeasible.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateReport<Q> {
    pub variable: SweepVariable,
    pub entries: Vec<KeyRateEntry<Q>>,
}

impl<Q> KeyRateReport<Q> {
    pub fn has_infeasible(&self) -> bool {
        self.entries.iter().any(|e| !e.is_feasible())
    }
}

pub(crate) fn validate_g(g: f64) -> Result<()> {
    if g.is_finite() && g >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("g", format!("gain factor must be finite and >= 1, got {g}")))
    }
}
