//! `VAR:START:STOP:STEP` sweep specifications.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Upper bound on points in one sweep.
pub const MAX_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    /// Total Alice-Bob distance, km.
    Distance,
    /// Attack frequency shift, MHz.
    FDelta,
    /// AOM modulation frequency, MHz.
    Frequency,
    /// AOM drive voltage, V.
    Voltage,
}

impl Variable {
    pub fn name(&self) -> &'static str {
        match self {
            Variable::Distance => "distance",
            Variable::FDelta => "f_delta",
            Variable::Frequency => "frequency",
            Variable::Voltage => "voltage",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "distance" | "L" | "L_km" => Variable::Distance,
            "f_delta" | "fdelta" | "f-delta" => Variable::FDelta,
            "frequency" | "f" | "f_aom" => Variable::Frequency,
            "voltage" | "v" => Variable::Voltage,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: Variable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn new(variable: Variable, start: f64, stop: f64, step: f64) -> Result<Self> {
        let spec = Self { variable, start, stop, step };
        spec.check().map_err(|reason| Error::Sweep { spec: spec.to_string(), reason })?;
        Ok(spec)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err("bounds and step must be finite".into());
        }
        if self.step <= 0.0 {
            return Err(format!("step must be > 0, got {}", self.step));
        }
        if self.stop < self.start {
            return Err(format!("stop {} is below start {}", self.stop, self.start));
        }
        let n = ((self.stop - self.start) / self.step).floor();
        if !(n < MAX_POINTS as f64) {
            return Err(format!("more than {MAX_POINTS} points"));
        }
        Ok(())
    }

    /// Points `start + i * step` up to and including `stop` (within a
    /// relative tolerance, so `0:1:0.1` ends at 1).
    pub fn values(&self) -> Vec<f64> {
        let span = (self.stop - self.start) / self.step;
        let n = (span + 1e-9 * span.abs().max(1.0)).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }

    pub fn require(&self, allowed: &[Variable]) -> Result<()> {
        if allowed.contains(&self.variable) {
            Ok(())
        } else {
            let names: Vec<&str> = allowed.iter().map(|v| v.name()).collect();
            Err(Error::Sweep {
                spec: self.to_string(),
                reason: format!("variable must be one of: {}", names.join(", ")),
            })
        }
    }
}

impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: String| Error::Sweep { spec: s.to_string(), reason };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(err(format!("expected VAR:START:STOP:STEP, got {} fields", parts.len())));
        }
        let variable = Variable::parse(parts[0].trim()).ok_or_else(|| err(format!("unknown variable `{}`", parts[0])))?;
        let num = |i: usize, what: &str| -> Result<f64> {
            parts[i].trim().parse::<f64>().map_err(|_| err(format!("{what} `{}` is not a number", parts[i])))
        };
        let spec = Self { variable, start: num(1, "start")?, stop: num(2, "stop")?, step: num(3, "step")? };
        spec.check().map_err(err)?;
        Ok(spec)
    }
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.variable.name(), self.start, self.stop, self.step)
    }
}

impl Serialize for SweepSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SweepSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
