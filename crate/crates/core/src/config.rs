//! TOML run configuration.
//!
//! Every leaf is optional; omitted values take the built-in defaults of their
//! section. Tables may be given inline as `knots = [[x, y], ...]` or as
//! `csv = "path"`, resolved relative to the config file.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aom::{grid, AomModel, AomPhysics, FrequencyResponseTable, VoltageCalibrationTable, DEFAULT_PEAK_FREQUENCY_MHZ};
use crate::attack::{AttackConfig, GainTable};
use crate::error::{Error, Result};
use crate::keyrate::sns::SnsModel;
use crate::opll::OpllConfig;
use crate::params::{ChannelParams, IntensitySettings, ProtocolParams, SystemParams};
use crate::tables::{read_pairs_file, FREQUENCY_COLUMNS, GAIN_COLUMNS, VOLTAGE_COLUMNS};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Intensities {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Channel {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_det: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_dark: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_opt: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfProtocol {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duty_cycle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_slices: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_ec: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnsProtocol {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_ec: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Fixed effective detector rate; the built-in model is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_delta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnsModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aopp: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfSection {
    pub intensities: Intensities,
    pub channel: Channel,
    pub protocol: TfProtocol,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnsSection {
    pub intensities: Intensities,
    pub channel: Channel,
    pub protocol: SnsProtocol,
    pub model: SnsModelSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_pt_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_pt_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_aom0_mhz: Option<f64>,
    /// Explicit relative impedance; otherwise fitted to `peak_frequency_mhz`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_frequency_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_aom_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_in_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation_cap_db: Option<f64>,
}

/// Knots given inline or read from a two-column CSV file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn load_table(
    knots: &Option<Vec<[f64; 2]>>,
    csv: &Option<PathBuf>,
    base: &Path,
    columns: [&str; 2],
    default: Vec<(f64, f64)>,
) -> Result<Vec<(f64, f64)>> {
    match (knots, csv) {
        (Some(_), Some(_)) => Err(Error::Config("give either `knots` or `csv`, not both".into())),
        (Some(k), None) => Ok(k.iter().map(|p| (p[0], p[1])).collect()),
        (None, Some(path)) => read_pairs_file(&base.join(path), columns),
        (None, None) => Ok(default),
    }
}

fn inline_knots(pts: Vec<(f64, f64)>) -> Option<Vec<[f64; 2]>> {
    Some(pts.into_iter().map(|(x, y)| [x, y]).collect())
}

impl TableSource {
    fn load(&self, base: &Path, columns: [&str; 2], default: Vec<(f64, f64)>) -> Result<Vec<(f64, f64)>> {
        load_table(&self.knots, &self.csv, base, columns, default)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoltageTableSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_frequency_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyMode {
    /// Measured frequency-response table.
    Table,
    /// Analytic diffraction-efficiency curve.
    Analytic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyTableSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<FrequencyMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AomSection {
    pub physics: Physics,
    pub voltage_table: VoltageTableSection,
    pub frequency_table: FrequencyTableSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_aom1_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_aom2_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switch_rate_khz: Option<f64>,
    pub gains: TableSource,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voltage_start_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voltage_stop_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voltage_step_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_start_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_stop_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_step_mhz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tf: TfSection,
    pub sns: SnsSection,
    pub aom: AomSection,
    pub attack: AttackSection,
    pub opll: OpllConfig,
    pub calibration: CalibrationSection,
}

/// Fully validated inputs for every command.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub tf: SystemParams,
    pub sns: SystemParams,
    pub sns_model: SnsModel,
    pub aom: AomModel,
    pub attack: AttackConfig,
    pub gains: GainTable,
    pub opll: OpllConfig,
    pub v_grid: Vec<f64>,
    pub f_grid: Vec<f64>,
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    /// 1-based line in the config text, when it could be located.
    pub line: Option<usize>,
    /// Dotted key path, e.g. `tf.intensities.mu1`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of `key` inside `[section]`, or of the header itself.
fn locate(text: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let mut current = String::new();
    let mut header_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = h.trim().to_string();
            if current == section {
                header_line = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some(k) = key {
                let name = line.split('=').next().unwrap_or("").trim();
                if name == k {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let at = e.span().map(|s| format!("line {}: ", line_of(text, s.start))).unwrap_or_default();
            Error::Config(format!("{at}{}", e.message().trim()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Every value spelled out explicitly; this is the shipped default file.
    pub fn full_default() -> Self {
        let tf = SystemParams::tf_default();
        let sns = SystemParams::sns_default();
        let phys = AomPhysics::default();
        let attack = AttackConfig::from_delta(30.0, 100.0).expect("valid default attack");
        let sns_model = SnsModel::default();
        Config {
            tf: TfSection {
                intensities: intensities_of(&tf.intensities),
                channel: channel_of(&tf.channel),
                protocol: TfProtocol {
                    duty_cycle: Some(tf.protocol.duty_cycle()),
                    phase_slices: Some(tf.protocol.phase_slices()),
                    f_ec: Some(tf.protocol.f_ec()),
                },
            },
            sns: SnsSection {
                intensities: intensities_of(&sns.intensities),
                channel: channel_of(&sns.channel),
                protocol: SnsProtocol {
                    f_ec: Some(sns.protocol.f_ec()),
                    n_total: Some(sns.protocol.n_total()),
                    gamma: Some(sns.protocol.gamma()),
                    t_delta: None,
                },
                model: SnsModelSection { signal_probability: Some(sns_model.signal_probability), aopp: Some(sns_model.aopp) },
            },
            aom: AomSection {
                physics: Physics {
                    wavelength_nm: Some(phys.wavelength_nm),
                    m2: Some(phys.m2),
                    l_pt_m: Some(phys.l_pt_m),
                    h_pt_m: Some(phys.h_pt_m),
                    f_aom0_mhz: Some(phys.f_aom0_mhz),
                    z_m: None,
                    peak_frequency_mhz: Some(DEFAULT_PEAK_FREQUENCY_MHZ),
                    delta_aom_db: Some(phys.delta_aom_db),
                    p_in_mw: Some(phys.p_in_mw),
                    saturation_cap_db: Some(phys.saturation_cap_db),
                },
                voltage_table: VoltageTableSection {
                    reference_frequency_mhz: Some(VoltageCalibrationTable::default().reference_frequency_mhz()),
                    knots: inline_knots(VoltageCalibrationTable::default().entries()),
                    csv: None,
                },
                frequency_table: FrequencyTableSection {
                    mode: Some(FrequencyMode::Table),
                    knots: inline_knots(FrequencyResponseTable::default().entries()),
                    csv: None,
                },
            },
            attack: AttackSection {
                f_aom1_mhz: Some(attack.f_aom1_mhz()),
                f_aom2_mhz: Some(attack.f_aom2_mhz()),
                switch_rate_khz: Some(attack.switch_rate_khz()),
                gains: TableSource { knots: inline_knots(GainTable::default().points()), csv: None },
            },
            opll: OpllConfig::default(),
            calibration: CalibrationSection {
                voltage_start_v: Some(8.5),
                voltage_stop_v: Some(15.0),
                voltage_step_v: Some(0.05),
                frequency_start_mhz: Some(150.0),
                frequency_stop_mhz: Some(240.0),
                frequency_step_mhz: Some(1.0),
            },
        }
    }

    fn resolve_tf_protocol(&self) -> Result<ProtocolParams> {
        let p = SystemParams::tf_default().protocol;
        let s = &self.tf.protocol;
        ProtocolParams::new(
            s.duty_cycle.unwrap_or(p.duty_cycle()),
            s.phase_slices.unwrap_or(p.phase_slices()),
            s.f_ec.unwrap_or(p.f_ec()),
            p.n_total(),
            p.gamma(),
            None,
        )
    }

    fn resolve_sns_protocol(&self) -> Result<ProtocolParams> {
        let p = SystemParams::sns_default().protocol;
        let s = &self.sns.protocol;
        ProtocolParams::new(
            p.duty_cycle(),
            p.phase_slices(),
            s.f_ec.unwrap_or(p.f_ec()),
            s.n_total.unwrap_or(p.n_total()),
            s.gamma.unwrap_or(p.gamma()),
            s.t_delta,
        )
    }

    fn resolve_tf(&self) -> Result<SystemParams> {
        let d = SystemParams::tf_default();
        Ok(SystemParams {
            intensities: resolve_intensities(&self.tf.intensities, &d.intensities)?,
            channel: resolve_channel(&self.tf.channel, &d.channel)?,
            protocol: self.resolve_tf_protocol()?,
        })
    }

    fn resolve_sns(&self) -> Result<SystemParams> {
        let d = SystemParams::sns_default();
        Ok(SystemParams {
            intensities: resolve_intensities(&self.sns.intensities, &d.intensities)?,
            channel: resolve_channel(&self.sns.channel, &d.channel)?,
            protocol: self.resolve_sns_protocol()?,
        })
    }

    fn resolve_sns_model(&self) -> Result<SnsModel> {
        let d = SnsModel::default();
        let m = SnsModel {
            signal_probability: self.sns.model.signal_probability.unwrap_or(d.signal_probability),
            aopp: self.sns.model.aopp.unwrap_or(d.aopp),
        };
        m.validate()?;
        Ok(m)
    }

    fn resolve_physics(&self) -> Result<AomPhysics> {
        let d = AomPhysics::default();
        let s = &self.aom.physics;
        let mut p = AomPhysics {
            wavelength_nm: s.wavelength_nm.unwrap_or(d.wavelength_nm),
            m2: s.m2.unwrap_or(d.m2),
            l_pt_m: s.l_pt_m.unwrap_or(d.l_pt_m),
            h_pt_m: s.h_pt_m.unwrap_or(d.h_pt_m),
            f_aom0_mhz: s.f_aom0_mhz.unwrap_or(d.f_aom0_mhz),
            z_m: 1.0,
            delta_aom_db: s.delta_aom_db.unwrap_or(d.delta_aom_db),
            p_in_mw: s.p_in_mw.unwrap_or(d.p_in_mw),
            saturation_cap_db: s.saturation_cap_db.unwrap_or(d.saturation_cap_db),
        };
        p.z_m = match s.z_m {
            Some(z) => z,
            None => {
                let peak = s.peak_frequency_mhz.unwrap_or(DEFAULT_PEAK_FREQUENCY_MHZ);
                if !(peak.is_finite() && peak > 0.0) {
                    return Err(Error::invalid("peak_frequency_mhz", format!("must be > 0, got {peak}")));
                }
                p.fitted_z_m(peak)
            }
        };
        p.validate()?;
        Ok(p)
    }

    fn resolve_voltage_table(&self, base: &Path) -> Result<VoltageCalibrationTable> {
        let d = VoltageCalibrationTable::default();
        let s = &self.aom.voltage_table;
        let pts = load_table(&s.knots, &s.csv, base, VOLTAGE_COLUMNS, d.entries())?;
        VoltageCalibrationTable::new(s.reference_frequency_mhz.unwrap_or(d.reference_frequency_mhz()), &pts)
    }

    fn resolve_frequency_table(&self, base: &Path) -> Result<Option<FrequencyResponseTable>> {
        let s = &self.aom.frequency_table;
        match s.mode.unwrap_or(FrequencyMode::Table) {
            FrequencyMode::Analytic => Ok(None),
            FrequencyMode::Table => {
                let pts = load_table(&s.knots, &s.csv, base, FREQUENCY_COLUMNS, FrequencyResponseTable::default().entries())?;
                Ok(Some(FrequencyResponseTable::new(&pts)?))
            }
        }
    }

    fn resolve_attack(&self) -> Result<AttackConfig> {
        let d = AttackConfig::from_delta(30.0, 100.0).expect("valid default attack");
        let s = &self.attack;
        AttackConfig::new(
            s.f_aom1_mhz.unwrap_or(d.f_aom1_mhz()),
            s.f_aom2_mhz.unwrap_or(d.f_aom2_mhz()),
            s.switch_rate_khz.unwrap_or(d.switch_rate_khz()),
        )
    }

    fn resolve_gains(&self, base: &Path) -> Result<GainTable> {
        let pts = self.attack.gains.load(base, GAIN_COLUMNS, GainTable::default().points())?;
        GainTable::new(&pts)
    }

    fn resolve_grids(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = Config::full_default().calibration;
        let s = &self.calibration;
        let pick = |v: Option<f64>, dv: Option<f64>| v.or(dv).unwrap_or(0.0);
        let v = (pick(s.voltage_start_v, d.voltage_start_v), pick(s.voltage_stop_v, d.voltage_stop_v), pick(s.voltage_step_v, d.voltage_step_v));
        let f = (
            pick(s.frequency_start_mhz, d.frequency_start_mhz),
            pick(s.frequency_stop_mhz, d.frequency_stop_mhz),
            pick(s.frequency_step_mhz, d.frequency_step_mhz),
        );
        for (name, (a, b, st)) in [("voltage", v), ("frequency", f)] {
            if !(a.is_finite() && b.is_finite() && st.is_finite() && st > 0.0 && b >= a) {
                return Err(Error::invalid("grid", format!("{name} grid needs finite start <= stop and step > 0")));
            }
            if (b - a) / st > 1e6 {
                return Err(Error::invalid("grid", format!("{name} grid has more than 10^6 points")));
            }
        }
        Ok((grid(v.0, v.1, v.2), grid(f.0, f.1, f.2)))
    }

    /// Builds validated parameters; `base` anchors relative CSV paths.
    pub fn resolve(&self, base: &Path) -> Result<Resolved> {
        let (v_grid, f_grid) = self.resolve_grids()?;
        let opll = self.opll.clone();
        opll.validate()?;
        Ok(Resolved {
            tf: self.resolve_tf()?,
            sns: self.resolve_sns()?,
            sns_model: self.resolve_sns_model()?,
            aom: AomModel {
                physics: self.resolve_physics()?,
                voltage_table: self.resolve_voltage_table(base)?,
                frequency_table: self.resolve_frequency_table(base)?,
            },
            attack: self.resolve_attack()?,
            gains: self.resolve_gains(base)?,
            opll,
            v_grid,
            f_grid,
        })
    }

    /// Same configuration with CSV-backed tables replaced by inline knots,
    /// so the result no longer depends on other files.
    pub fn inlined(&self, base: &Path) -> Result<Self> {
        let mut out = self.clone();
        if self.aom.voltage_table.csv.is_some() {
            out.aom.voltage_table.knots = inline_knots(self.resolve_voltage_table(base)?.entries());
            out.aom.voltage_table.csv = None;
        }
        if self.aom.frequency_table.csv.is_some() {
            if let Some(t) = self.resolve_frequency_table(base)? {
                out.aom.frequency_table.knots = inline_knots(t.entries());
            }
            out.aom.frequency_table.csv = None;
        }
        if self.attack.gains.csv.is_some() {
            out.attack.gains = TableSource { knots: inline_knots(self.resolve_gains(base)?.points()), csv: None };
        }
        Ok(out)
    }

    /// Every invariant breach, each section checked independently.
    pub fn diagnostics(&self, base: &Path, text: Option<&str>) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut check = |section: &str, r: Result<()>| {
            if let Err(e) = r {
                let key = match &e {
                    Error::InvalidParameter { name, .. } => Some(*name),
                    Error::BeyondLockLimit { .. } => Some("f_aom2_mhz"),
                    _ => None,
                };
                let path = match key {
                    Some(k) => format!("{section}.{k}"),
                    None => section.to_string(),
                };
                let line = text.and_then(|t| locate(t, section, key));
                out.push(Diagnostic { line, path, message: e.to_string() });
            }
        };
        check("tf.intensities", resolve_intensities(&self.tf.intensities, &SystemParams::tf_default().intensities).map(drop));
        check("tf.channel", resolve_channel(&self.tf.channel, &SystemParams::tf_default().channel).map(drop));
        check("tf.protocol", self.resolve_tf_protocol().map(drop));
        check("sns.intensities", resolve_intensities(&self.sns.intensities, &SystemParams::sns_default().intensities).map(drop));
        check("sns.channel", resolve_channel(&self.sns.channel, &SystemParams::sns_default().channel).map(drop));
        check("sns.protocol", self.resolve_sns_protocol().map(drop));
        check("sns.model", self.resolve_sns_model().map(drop));
        check("aom.physics", self.resolve_physics().map(drop));
        check("aom.voltage_table", self.resolve_voltage_table(base).map(drop));
        check("aom.frequency_table", self.resolve_frequency_table(base).map(drop));
        check("attack", self.resolve_attack().map(drop));
        check("attack.gains", self.resolve_gains(base).map(drop));
        check("opll", self.opll.validate());
        check("calibration", self.resolve_grids().map(drop));
        out
    }
}

fn intensities_of(i: &IntensitySettings) -> Intensities {
    Intensities { mu0: Some(i.mu0()), mu1: Some(i.mu1()), mu2: Some(i.mu2()) }
}

fn channel_of(c: &ChannelParams) -> Channel {
    Channel {
        alpha: Some(c.alpha()),
        length_km: Some(c.length_km()),
        eta_det: Some(c.eta_det()),
        p_dark: Some(c.p_dark()),
        e_opt: Some(c.e_opt()),
    }
}

fn resolve_intensities(s: &Intensities, d: &IntensitySettings) -> Result<IntensitySettings> {
    IntensitySettings::new(s.mu0.unwrap_or(d.mu0()), s.mu1.unwrap_or(d.mu1()), s.mu2.unwrap_or(d.mu2()))
}

fn resolve_channel(s: &Channel, d: &ChannelParams) -> Result<ChannelParams> {
    ChannelParams::new(
        s.alpha.unwrap_or(d.alpha()),
        s.length_km.unwrap_or(d.length_km()),
        s.eta_det.unwrap_or(d.eta_det()),
        s.p_dark.unwrap_or(d.p_dark()),
        s.e_opt.unwrap_or(d.e_opt()),
    )
}

/// Loads, validates and resolves a config file.
pub fn load_resolved(path: &Path) -> Result<(Config, Resolved)> {
    let cfg = Config::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolved = cfg.resolve(base)?;
    Ok((cfg.inlined(base)?, resolved))
}

/// Diagnostics for a config file; parse failures become a single entry
/// carrying the line of the offending token.
pub fn validate_config_text(text: &str, base: &Path) -> Vec<Diagnostic> {
    match toml::from_str::<Config>(text) {
        Err(e) => vec![Diagnostic {
            line: e.span().map(|s| line_of(text, s.start)),
            path: "<parse>".into(),
            message: e.message().trim().to_string(),
        }],
        Ok(cfg) => cfg.diagnostics(base, Some(text)),
    }
}

pub fn validate_config(path: &Path) -> Result<Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(validate_config_text(&text, path.parent().unwrap_or(Path::new("."))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn here() -> &'static Path {
        Path::new(".")
    }

    #[test]
    fn empty_config_is_default() {
        let cfg = Config::from_toml_str("").unwrap();
        let r = cfg.resolve(here()).unwrap();
        assert_eq!(r.tf, SystemParams::tf_default());
        assert_eq!(r.sns, SystemParams::sns_default());
        assert_eq!(r.aom, AomModel::default());
        assert_eq!(r.gains, GainTable::default());
    }

    #[test]
    fn full_default_round_trips() {
        let text = Config::full_default().to_toml_string().unwrap();
        let back = Config::from_toml_str(&text).unwrap();
        assert_eq!(back, Config::full_default());
        let a = back.resolve(here()).unwrap();
        let b = Config::default().resolve(here()).unwrap();
        assert_eq!(a, b);
        assert!(validate_config_text(&text, here()).is_empty());
    }

    #[test]
    fn partial_sections_keep_their_own_defaults() {
        let cfg = Config::from_toml_str("[tf.channel]\np_dark = 0.0\n[sns.channel]\nlength_km = 50\n").unwrap();
        let r = cfg.resolve(here()).unwrap();
        assert_eq!(r.tf.channel.p_dark(), 0.0);
        assert_eq!(r.tf.channel.alpha(), 0.2);
        assert_eq!(r.sns.channel.alpha(), 0.157);
        assert_eq!(r.sns.channel.length_km(), 50.0);
    }

    #[test]
    fn ordering_violation_reported_with_line() {
        let text = "[tf.intensities]\nmu1 = 0.01\nmu2 = 0.01\n";
        let d = validate_config_text(text, here());
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].path, "tf.intensities.mu1");
        assert_eq!(d[0].line, Some(2));
    }

    #[test]
    fn lock_limit_reported() {
        let text = "[attack]\nf_aom1_mhz = 200\nf_aom2_mhz = 160\n";
        let d = validate_config_text(text, here());
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("30"), "{}", d[0].message);
        assert_eq!(d[0].line, Some(3));
    }

    #[test]
    fn parse_errors_carry_line() {
        let d = validate_config_text("[tf.channel]\nalpha = 0.2\nbogus = 1\n", here());
        assert_eq!(d[0].line, Some(3));
        let d = validate_config_text("[tf]\n[tf.channel\n", here());
        assert_eq!(d[0].line, Some(2));
        let d = validate_config_text("[opll]\ntimestep_us = \"fast\"\n", here());
        assert_eq!(d[0].line, Some(2));
    }

    #[test]
    fn several_findings_collected() {
        let text = "[sns.model]\nsignal_probability = 2.0\n[opll]\nlock_bandwidth_mhz = -1\n[aom.physics]\np_in_mw = 0\n";
        let d = validate_config_text(text, here());
        assert_eq!(d.len(), 3, "{d:?}");
    }

    #[test]
    fn csv_tables_resolve_and_inline() {
        let dir = std::env::temp_dir().join(format!("wsa-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("g.csv"), "f_delta_mhz,gain_fraction\n10,0.02\n30,0.05\n").unwrap();
        let cfg = Config::from_toml_str("[attack.gains]\ncsv = \"g.csv\"\n").unwrap();
        let r = cfg.resolve(&dir).unwrap();
        assert_eq!(r.gains.points(), vec![(0.0, 0.0), (10.0, 0.02), (30.0, 0.05)]);
        let inl = cfg.inlined(&dir).unwrap();
        assert!(inl.attack.gains.csv.is_none());
        assert_eq!(inl.resolve(here()).unwrap().gains, r.gains);
        let both = Config::from_toml_str("[attack.gains]\ncsv = \"g.csv\"\nknots = [[1, 0.1]]\n").unwrap();
        assert!(both.resolve(&dir).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
