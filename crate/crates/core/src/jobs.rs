//! Commands as data: each [`Job`] turns a resolved configuration into CSV
//! tables. The CLI and manifest re-runs share this path, so identical jobs on
//! identical configs produce identical bytes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aom::{attenuation_vs_frequency, attenuation_vs_voltage, calibrate, diffraction_efficiency, OperatingPoint};
use crate::attack::{attack_delta_at, gain_from_physics, per_station_gain, system_gain_factor, AttackConfig};
use crate::config::Resolved;
use crate::error::{Error, Result};
use crate::keyrate::sns::{sns_sweep_distance, sns_sweep_f_delta, SnsKeyQuantities};
use crate::keyrate::tf::{tf_sweep_distance, tf_sweep_f_delta, TfDecoyQuantities};
use crate::keyrate::{plob_bound, KeyRateReport};
use crate::opll::{heterodyne_spectrum, interference_stability, run_opll, simulate_pair};
use crate::params::{total_transmittance, SystemParams};
use crate::sweep::{SweepSpec, Variable};
use crate::tables::{fmt_f64, CsvTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2a,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl Figure {
    pub const ALL: [Figure; 5] = [Figure::Fig2a, Figure::Fig4, Figure::Fig5, Figure::Fig6, Figure::Fig7];

    pub fn id(&self) -> &'static str {
        match self {
            Figure::Fig2a => "fig2a",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL.into_iter().find(|f| f.id() == s).ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// How the key-rate commands obtain the gain factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainChoice {
    /// Explicit `g`.
    G(f64),
    /// `g = 1 + 2 G(f_delta)` from the gain table.
    FDelta(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    KeyrateTf { sweep: SweepSpec, gain: GainChoice },
    KeyrateSns { sweep: SweepSpec, gain: GainChoice },
    AomAttenuation { sweep: SweepSpec },
    AomCalibrate,
    AttackGain { sweep: SweepSpec },
    OpllSimulate { f_delta_mhz: f64, switch_rate_khz: f64, duration_us: f64, seed: u64 },
    Reproduce { figure: Figure },
}

impl Job {
    /// Subcommand words as typed on the command line.
    pub fn command_name(&self) -> String {
        match self {
            Job::KeyrateTf { .. } => "keyrate tf".into(),
            Job::KeyrateSns { .. } => "keyrate sns".into(),
            Job::AomAttenuation { .. } => "aom attenuation".into(),
            Job::AomCalibrate => "aom calibrate".into(),
            Job::AttackGain { .. } => "attack gain".into(),
            Job::OpllSimulate { .. } => "opll simulate".into(),
            Job::Reproduce { figure } => format!("reproduce {figure}"),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Job::OpllSimulate { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JobOutput {
    pub tables: Vec<CsvTable>,
    /// Points whose bounds could not be formed; their rates are written as 0.
    pub infeasible: Vec<String>,
}

pub fn run_job(job: &Job, cfg: &Resolved) -> Result<JobOutput> {
    match job {
        Job::KeyrateTf { sweep, gain } => keyrate_tf(cfg, &cfg.tf, sweep, *gain, "keyrate_tf"),
        Job::KeyrateSns { sweep, gain } => keyrate_sns(cfg, &cfg.sns, sweep, *gain, "keyrate_sns"),
        Job::AomAttenuation { sweep } => aom_attenuation(cfg, sweep),
        Job::AomCalibrate => aom_calibrate(cfg),
        Job::AttackGain { sweep } => attack_gain(cfg, sweep),
        Job::OpllSimulate { f_delta_mhz, switch_rate_khz, duration_us, seed } => {
            opll_simulate(cfg, *f_delta_mhz, *switch_rate_khz, *duration_us, *seed)
        }
        Job::Reproduce { figure } => reproduce(cfg, *figure),
    }
}

fn resolve_g(cfg: &Resolved, gain: GainChoice) -> Result<f64> {
    match gain {
        GainChoice::G(g) => Ok(g),
        GainChoice::FDelta(fd) => system_gain_factor(fd, fd, &cfg.gains),
    }
}

fn flags<Q>(report: &KeyRateReport<Q>, what: &str) -> Vec<String> {
    report
        .entries
        .iter()
        .flat_map(|e| {
            e.infeasible.iter().map(move |i| {
                format!("{what}: {} = {}: {} side: {}", report.variable.column(), fmt_f64(e.sweep_value), i.side, i.reason)
            })
        })
        .collect()
}

fn plob_at(params: &SystemParams, length_km: f64) -> Result<f64> {
    plob_bound(total_transmittance(&params.with_length(length_km)?.channel))
}

fn tf_report(cfg: &Resolved, params: &SystemParams, sweep: &SweepSpec, gain: GainChoice) -> Result<KeyRateReport<TfDecoyQuantities>> {
    sweep.require(&[Variable::Distance, Variable::FDelta])?;
    let xs = sweep.values();
    match sweep.variable {
        Variable::Distance => tf_sweep_distance(params, resolve_g(cfg, gain)?, &xs),
        _ => tf_sweep_f_delta(params, &xs, &cfg.gains),
    }
}

fn keyrate_tf(cfg: &Resolved, params: &SystemParams, sweep: &SweepSpec, gain: GainChoice, name: &str) -> Result<JobOutput> {
    let report = tf_report(cfg, params, sweep, gain)?;
    let mut t = CsvTable::new(
        name,
        &[
            report.variable.column(),
            "r_estimated",
            "r_true",
            "plob",
            "q_mu0_obs",
            "e_mu0_obs",
            "y1_l",
            "e1_u",
            "y1_l_true",
            "e1_u_true",
            "g",
            "feasible",
        ],
    );
    for e in &report.entries {
        let length = match report.variable {
            crate::keyrate::SweepVariable::DistanceKm => e.sweep_value,
            _ => params.channel.length_km(),
        };
        let mut row: Vec<String> = [
            e.sweep_value,
            e.r_estimated,
            e.r_true,
            plob_at(params, length)?,
            e.estimated.q_mu[0],
            e.estimated.e_mu[0],
            e.estimated.y1_l,
            e.estimated.e1_u,
            e.truth.y1_l,
            e.truth.e1_u,
            e.g,
        ]
        .iter()
        .map(|v| fmt_f64(*v))
        .collect();
        row.push(e.is_feasible().to_string());
        t.push(row);
    }
    Ok(JobOutput { tables: vec![t], infeasible: flags(&report, "keyrate tf") })
}

fn sns_report(cfg: &Resolved, params: &SystemParams, sweep: &SweepSpec, gain: GainChoice) -> Result<KeyRateReport<SnsKeyQuantities>> {
    sweep.require(&[Variable::Distance, Variable::FDelta])?;
    let xs = sweep.values();
    match sweep.variable {
        Variable::Distance => sns_sweep_distance(params, &cfg.sns_model, resolve_g(cfg, gain)?, &xs),
        _ => sns_sweep_f_delta(params, &cfg.sns_model, &xs, &cfg.gains),
    }
}

fn keyrate_sns(cfg: &Resolved, params: &SystemParams, sweep: &SweepSpec, gain: GainChoice, name: &str) -> Result<JobOutput> {
    let report = sns_report(cfg, params, sweep, gain)?;
    let mut t = CsvTable::new(
        name,
        &[
            report.variable.column(),
            "r_estimated",
            "r_true",
            "s1_l",
            "e1_u",
            "e_z",
            "s1_l_true",
            "e1_u_true",
            "n1",
            "n_t",
            "g",
            "feasible",
        ],
    );
    for e in &report.entries {
        let mut row: Vec<String> = [
            e.sweep_value,
            e.r_estimated,
            e.r_true,
            e.estimated.s1_l,
            e.estimated.e1_u,
            e.estimated.e_z,
            e.truth.s1_l,
            e.truth.e1_u,
            e.estimated.n1,
            e.estimated.n_t,
            e.g,
        ]
        .iter()
        .map(|v| fmt_f64(*v))
        .collect();
        row.push(e.is_feasible().to_string());
        t.push(row);
    }
    Ok(JobOutput { tables: vec![t], infeasible: flags(&report, "keyrate sns") })
}

fn aom_attenuation(cfg: &Resolved, sweep: &SweepSpec) -> Result<JobOutput> {
    sweep.require(&[Variable::Frequency, Variable::Voltage])?;
    let model = &cfg.aom;
    let t = match sweep.variable {
        Variable::Frequency => {
            let mut t = CsvTable::new(
                "aom_attenuation_frequency",
                &["f_aom_mhz", "attenuation_db", "diffraction_efficiency", "model_attenuation_db", "clamped"],
            );
            let v = OperatingPoint::nominal().voltage_v;
            for f in sweep.values() {
                let m = model.attenuation(f, v);
                let mut row: Vec<String> = [f, attenuation_vs_frequency(f, &model.physics), diffraction_efficiency(f, &model.physics), m.db]
                    .iter()
                    .map(|x| fmt_f64(*x))
                    .collect();
                row.push(m.clamped.to_string());
                t.push(row);
            }
            t
        }
        _ => {
            let mut t = CsvTable::new("aom_attenuation_voltage", &["voltage_v", "attenuation_db", "clamped"]);
            for v in sweep.values() {
                let s = attenuation_vs_voltage(v, &model.voltage_table);
                t.push(vec![fmt_f64(v), fmt_f64(s.value), s.clamped.to_string()]);
            }
            t
        }
    };
    Ok(JobOutput { tables: vec![t], infeasible: Vec::new() })
}

fn aom_calibrate(cfg: &Resolved) -> Result<JobOutput> {
    let cal = calibrate(&cfg.aom, &cfg.v_grid, &cfg.f_grid)?;
    let mut summary = CsvTable::new("aom_calibration", &["v_o_v", "f_o_mhz", "attenuation_db"]);
    summary.push_numbers(&[cal.v_o, cal.f_o, cal.attenuation_db]);
    let mut cm = CsvTable::new("aom_countermeasure", &["f_delta_mhz", "nominal_delta_db", "calibrated_delta_db", "calibrated_clamped"]);
    for i in 1..=60 {
        let fd = 0.5 * i as f64;
        let before = attack_delta_at(OperatingPoint::nominal(), fd, &cfg.aom);
        let after = attack_delta_at(cal.operating_point(), fd, &cfg.aom);
        cm.push(vec![fmt_f64(fd), fmt_f64(before.total_db), fmt_f64(after.total_db), after.clamped.to_string()]);
    }
    Ok(JobOutput { tables: vec![summary, cm], infeasible: Vec::new() })
}

fn attack_gain(cfg: &Resolved, sweep: &SweepSpec) -> Result<JobOutput> {
    sweep.require(&[Variable::FDelta])?;
    let mut t = CsvTable::new(
        "attack_gain",
        &["f_delta_mhz", "per_station_gain", "g_system", "physics_delta_db", "physics_gain", "physics_clamped"],
    );
    for fd in sweep.values() {
        let g = per_station_gain(fd, &cfg.gains)?;
        let phys = gain_from_physics(fd, &cfg.aom)?;
        let mut row: Vec<String> = [fd, g, system_gain_factor(fd, fd, &cfg.gains)?, phys.delta_db, phys.gain]
            .iter()
            .map(|x| fmt_f64(*x))
            .collect();
        row.push(phys.clamped.to_string());
        t.push(row);
    }
    Ok(JobOutput { tables: vec![t], infeasible: Vec::new() })
}

fn opll_simulate(cfg: &Resolved, f_delta: f64, rs: f64, duration: f64, seed: u64) -> Result<JobOutput> {
    // beyond the lock range the loop is expected to drop out; that is a
    // trace state, not an input error
    let attack = AttackConfig::unchecked(cfg.attack.f_aom1_mhz(), cfg.attack.f_aom1_mhz() - f_delta, rs)?;
    let trace = run_opll(&cfg.opll, &attack, &cfg.aom, &cfg.gains, duration, seed)?;

    let mut tt = CsvTable::new("opll_trace", &["t_us", "locked", "aom_cmd_mhz", "pzt_mhz", "power_mw", "beat_mhz", "drive_v"]);
    for s in &trace.samples {
        tt.push(vec![
            fmt_f64(s.t_us),
            s.locked.to_string(),
            fmt_f64(s.aom_cmd_mhz),
            fmt_f64(s.pzt_mhz),
            fmt_f64(s.power_mw),
            fmt_f64(s.beat_mhz),
            fmt_f64(s.drive_v),
        ]);
    }

    let mut st = CsvTable::new("opll_spectrum", &["frequency_mhz", "power_dbm", "occupancy"]);
    for p in heterodyne_spectrum(&trace, 0.0, trace.duration_us())? {
        st.push_numbers(&[p.frequency_mhz, p.power_dbm, p.occupancy]);
    }

    let idle = AttackConfig::unchecked(cfg.attack.f_aom1_mhz(), cfg.attack.f_aom1_mhz(), rs)?;
    let baseline = run_opll(&cfg.opll, &idle, &cfg.aom, &cfg.gains, duration, seed)?.mean_power_mw();
    let (alice, bob) = simulate_pair(&cfg.opll, &attack, &cfg.aom, &cfg.gains, duration, seed)?;
    let locked = trace.samples.iter().filter(|s| s.locked).count() as f64 / trace.samples.len().max(1) as f64;
    let mut summary = CsvTable::new("opll_summary", &["metric", "value"]);
    for (k, v) in [
        ("mean_power_mw", trace.mean_power_mw()),
        ("baseline_power_mw", baseline),
        ("relative_excess", trace.mean_power_mw() / baseline - 1.0),
        ("locked_fraction", locked),
        ("interference_stability", interference_stability(&alice, &bob)?),
        ("drive_high_v", trace.drive.high_v),
        ("drive_low_v", trace.drive.low_v),
    ] {
        summary.push(vec![k.to_string(), fmt_f64(v)]);
    }
    Ok(JobOutput { tables: vec![tt, st, summary], infeasible: Vec::new() })
}

fn reproduce(cfg: &Resolved, figure: Figure) -> Result<JobOutput> {
    match figure {
        Figure::Fig2a => {
            let mut t = CsvTable::new("fig2a", &["f_aom_mhz", "attenuation_db", "diffraction_efficiency"]);
            for i in 0..=480 {
                let f = 0.5 * i as f64;
                t.push_numbers(&[f, attenuation_vs_frequency(f, &cfg.aom.physics), diffraction_efficiency(f, &cfg.aom.physics)]);
            }
            Ok(JobOutput { tables: vec![t], infeasible: Vec::new() })
        }
        Figure::Fig4 => {
            let mut t = CsvTable::new("fig4", &["f_delta_mhz", "gain_fraction", "g_system"]);
            for (fd, g) in cfg.gains.points() {
                t.push_numbers(&[fd, g, system_gain_factor(fd, fd, &cfg.gains)?]);
            }
            Ok(JobOutput { tables: vec![t], infeasible: Vec::new() })
        }
        Figure::Fig5 => {
            let lengths = SweepSpec::new(Variable::Distance, 0.0, 700.0, 10.0)?.values();
            let g = system_gain_factor(30.0, 30.0, &cfg.gains)?;
            let attacked = tf_sweep_distance(&cfg.tf, g, &lengths)?;
            let honest = tf_sweep_distance(&cfg.tf, 1.0, &lengths)?;
            let mut t = CsvTable::new("fig5", &["L_km", "r_estimated", "r_true", "r_no_attack", "plob", "g"]);
            for (a, h) in attacked.entries.iter().zip(&honest.entries) {
                t.push_numbers(&[a.sweep_value, a.r_estimated, a.r_true, h.r_true, plob_at(&cfg.tf, a.sweep_value)?, g]);
            }
            let mut infeasible = flags(&attacked, "fig5");
            infeasible.extend(flags(&honest, "fig5"));
            Ok(JobOutput { tables: vec![t], infeasible })
        }
        Figure::Fig6 => {
            let params = cfg.tf.with_length(560.0)?;
            let fds = SweepSpec::new(Variable::FDelta, 0.0, 30.0, 1.0)?.values();
            let report = tf_sweep_f_delta(&params, &fds, &cfg.gains)?;
            let mut t = CsvTable::new("fig6", &["f_delta_mhz", "g", "r_estimated", "r_true"]);
            for e in &report.entries {
                t.push_numbers(&[e.sweep_value, e.g, e.r_estimated, e.r_true]);
            }
            Ok(JobOutput { tables: vec![t], infeasible: flags(&report, "fig6") })
        }
        Figure::Fig7 => {
            let lengths = SweepSpec::new(Variable::Distance, 0.0, 1000.0, 10.0)?.values();
            let g = system_gain_factor(30.0, 30.0, &cfg.gains)?;
            let attacked = sns_sweep_distance(&cfg.sns, &cfg.sns_model, g, &lengths)?;
            let honest = sns_sweep_distance(&cfg.sns, &cfg.sns_model, 1.0, &lengths)?;
            let mut t = CsvTable::new("fig7", &["L_km", "r_estimated", "r_true", "r_no_attack", "plob", "g"]);
            for (a, h) in attacked.entries.iter().zip(&honest.entries) {
                t.push_numbers(&[a.sweep_value, a.r_estimated, a.r_true, h.r_true, plob_at(&cfg.sns, a.sweep_value)?, g]);
            }
            let mut infeasible = flags(&attacked, "fig7");
            infeasible.extend(flags(&honest, "fig7"));
            Ok(JobOutput { tables: vec![t], infeasible })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use std::path::Path;

    fn cfg() -> Resolved {
        Config::default().resolve(Path::new(".")).unwrap()
    }

    #[test]
    fn figure_ids_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.id().parse::<Figure>().unwrap(), f);
        }
        assert!(matches!("fig3".parse::<Figure>(), Err(Error::UnknownFigure(_))));
    }

    #[test]
    fn fig4_knots_exact() {
        let out = run_job(&Job::Reproduce { figure: Figure::Fig4 }, &cfg()).unwrap();
        let rows = &out.tables[0].rows;
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[5], vec!["30", "0.0435", "1.087"]);
    }

    #[test]
    fn tf_columns() {
        let job = Job::KeyrateTf { sweep: "distance:100:300:100".parse().unwrap(), gain: GainChoice::G(1.087) };
        let out = run_job(&job, &cfg()).unwrap();
        let t = &out.tables[0];
        assert_eq!(&t.header[..8], &["L_km", "r_estimated", "r_true", "plob", "q_mu0_obs", "e_mu0_obs", "y1_l", "e1_u"]);
        assert_eq!(t.rows.len(), 3);
        assert!(out.infeasible.is_empty());
    }

    #[test]
    fn wrong_sweep_variable_rejected() {
        let job = Job::AttackGain { sweep: "distance:0:10:1".parse().unwrap() };
        assert!(matches!(run_job(&job, &cfg()), Err(Error::Sweep { .. })));
    }

    #[test]
    fn job_serde_round_trip() {
        let jobs = [
            Job::KeyrateSns { sweep: "distance:0:100:50".parse().unwrap(), gain: GainChoice::FDelta(20.0) },
            Job::OpllSimulate { f_delta_mhz: 30.0, switch_rate_khz: 100.0, duration_us: 50.0, seed: 7 },
            Job::AomCalibrate,
            Job::Reproduce { figure: Figure::Fig5 },
        ];
        for job in jobs {
            #[derive(Serialize, Deserialize)]
            struct W {
                job: Job,
            }
            let text = toml::to_string(&W { job: job.clone() }).unwrap();
            let back: W = toml::from_str(&text).unwrap();
            assert_eq!(back.job, job, "{text}");
        }
    }
}
