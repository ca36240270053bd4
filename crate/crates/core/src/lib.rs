//! Wavelength-switching attack on OPLL-locked twin-field QKD: AOM loss
//! model, attacker gain, decoy-state key-rate bounds evaluated with and
//! without knowledge of the attack, and a loop simulation.

pub mod aom;
pub mod attack;
pub mod config;
pub mod error;
pub mod interp;
pub mod jobs;
pub mod keyrate;
pub mod manifest;
pub mod opll;
pub mod params;
pub mod sweep;
pub mod tables;

pub use error::{Error, Result};
