//! `wsa` — command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error,
//! 3 completed but some points were infeasible (rates written as 0).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wsa_core::config::{load_resolved, validate_config, Config, Resolved};
use wsa_core::jobs::{run_job, Figure, GainChoice, Job, JobOutput};
use wsa_core::manifest::{write_outputs, RunManifest};
use wsa_core::sweep::SweepSpec;
use wsa_core::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "wsa", version, about = "Wavelength-switching attack toolkit for OPLL-locked twin-field QKD")]
struct Cli {
    /// TOML configuration; built-in defaults when absent.
    #[arg(long, global = true, env = "WSA_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory for CSV files and their manifests.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decoy-state key rates, estimated vs true under attack.
    #[command(subcommand)]
    Keyrate(KeyrateCmd),
    /// AOM insertion-loss model.
    #[command(subcommand)]
    Aom(AomCmd),
    /// Attacker gain.
    #[command(subcommand)]
    Attack(AttackCmd),
    /// Optical phase-locked loop simulation.
    #[command(subcommand)]
    Opll(OpllCmd),
    /// Regenerate the data behind one figure.
    Reproduce {
        /// fig2a, fig4, fig5, fig6 or fig7
        figure: String,
    },
    /// Check a configuration file against every parameter invariant.
    Validate {
        /// Defaults to --config.
        file: Option<PathBuf>,
    },
    /// Re-run the job recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        /// Compare against the CSVs next to the manifest instead of writing.
        #[arg(long)]
        check: bool,
    },
    /// Configuration helpers.
    #[command(subcommand)]
    Config(ConfigCmd),
}

#[derive(Args)]
struct GainArgs {
    /// Explicit gain factor g.
    #[arg(long, conflicts_with = "f_delta")]
    g: Option<f64>,
    /// Attack frequency shift in MHz; g is taken from the gain table.
    #[arg(long)]
    f_delta: Option<f64>,
}

#[derive(Subcommand)]
enum KeyrateCmd {
    Tf {
        /// distance:START:STOP:STEP or f_delta:START:STOP:STEP
        #[arg(long)]
        sweep: SweepSpec,
        #[command(flatten)]
        gain: GainArgs,
    },
    Sns {
        #[arg(long)]
        sweep: SweepSpec,
        #[command(flatten)]
        gain: GainArgs,
    },
}

#[derive(Subcommand)]
enum AomCmd {
    /// Attenuation vs frequency or voltage.
    Attenuation {
        /// frequency:START:STOP:STEP or voltage:START:STOP:STEP
        #[arg(long)]
        sweep: SweepSpec,
    },
    /// Minimum-loss operating point and the post-calibration attack delta.
    Calibrate,
}

#[derive(Subcommand)]
enum AttackCmd {
    /// Per-station gain and system factor vs frequency shift.
    Gain {
        #[arg(long, default_value = "f_delta:0:30:0.5")]
        sweep: SweepSpec,
    },
}

#[derive(Subcommand)]
enum OpllCmd {
    Simulate {
        /// Frequency shift in MHz; defaults to the configured attack.
        #[arg(long)]
        f_delta: Option<f64>,
        /// Switching rate in kHz; defaults to the configured attack.
        #[arg(long)]
        rs: Option<f64>,
        /// Simulated time in microseconds.
        #[arg(long, default_value_t = 100.0)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum ConfigCmd {
    /// Print a configuration with every default spelled out.
    Default,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Csv { .. }
            | Error::Table(_)
            | Error::Sweep { .. }
            | Error::UnknownFigure(_)
            | Error::InvalidParameter { .. }
            | Error::BeyondLockLimit { .. }
            | Error::Manifest(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn load(path: Option<&Path>) -> Result<(Config, Resolved), Failure> {
    match path {
        Some(p) => Ok(load_resolved(p)?),
        None => {
            let cfg = Config::full_default();
            let resolved = cfg.resolve(Path::new("."))?;
            Ok((cfg, resolved))
        }
    }
}

fn gain_choice(args: &GainArgs, cfg: &Resolved) -> GainChoice {
    match (args.g, args.f_delta) {
        (Some(g), _) => GainChoice::G(g),
        (None, Some(fd)) => GainChoice::FDelta(fd),
        (None, None) => GainChoice::FDelta(cfg.attack.f_delta()),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let config_path = cli.config.as_deref();
    let job = match cli.command {
        Command::Validate { file } => {
            let path = file.or(cli.config).ok_or_else(|| Failure::Usage("validate needs a file or --config".into()))?;
            let diags = validate_config(&path)?;
            for d in &diags {
                println!("{}: {d}", path.display());
            }
            return Ok(if diags.is_empty() { 0 } else { EXIT_USAGE });
        }
        Command::Config(ConfigCmd::Default) => {
            print!("{}", Config::full_default().to_toml_string()?);
            return Ok(0);
        }
        Command::Rerun { manifest, check } => return rerun(&manifest, check, &cli.out),
        Command::Keyrate(KeyrateCmd::Tf { sweep, gain }) => {
            let (_, r) = load(config_path)?;
            Job::KeyrateTf { sweep, gain: gain_choice(&gain, &r) }
        }
        Command::Keyrate(KeyrateCmd::Sns { sweep, gain }) => {
            let (_, r) = load(config_path)?;
            Job::KeyrateSns { sweep, gain: gain_choice(&gain, &r) }
        }
        Command::Aom(AomCmd::Attenuation { sweep }) => Job::AomAttenuation { sweep },
        Command::Aom(AomCmd::Calibrate) => Job::AomCalibrate,
        Command::Attack(AttackCmd::Gain { sweep }) => Job::AttackGain { sweep },
        Command::Opll(OpllCmd::Simulate { f_delta, rs, duration, seed }) => {
            let (_, r) = load(config_path)?;
            Job::OpllSimulate {
                f_delta_mhz: f_delta.unwrap_or(r.attack.f_delta()),
                switch_rate_khz: rs.unwrap_or(r.attack.switch_rate_khz()),
                duration_us: duration,
                seed,
            }
        }
        Command::Reproduce { figure } => Job::Reproduce { figure: figure.parse::<Figure>()? },
    };
    let (config, resolved) = load(config_path)?;
    let output = run_job(&job, &resolved)?;
    finish(&cli.out, &job, &config, &output)
}

fn finish(dir: &Path, job: &Job, config: &Config, output: &JobOutput) -> Result<u8, Failure> {
    for path in write_outputs(dir, job, config, output)? {
        println!("{}", path.display());
    }
    for flag in &output.infeasible {
        eprintln!("infeasible: {flag}");
    }
    Ok(if output.infeasible.is_empty() { 0 } else { EXIT_INFEASIBLE })
}

fn rerun(path: &Path, check: bool, out: &Path) -> Result<u8, Failure> {
    let manifest = RunManifest::load(path)?;
    let output = manifest.rerun()?;
    if !check {
        return finish(out, &manifest.job, &manifest.config, &output);
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut mismatched = 0;
    for table in &output.tables {
        let csv = dir.join(table.file_name());
        let fresh = table.to_bytes()?;
        match std::fs::read(&csv) {
            Ok(old) if old == fresh => println!("match: {}", csv.display()),
            Ok(_) => {
                mismatched += 1;
                println!("differs: {}", csv.display());
            }
            Err(e) => {
                mismatched += 1;
                println!("missing: {}: {e}", csv.display());
            }
        }
    }
    if mismatched > 0 {
        return Err(Failure::Runtime(format!("{mismatched} output(s) differ from the manifest's run")));
    }
    Ok(if output.infeasible.is_empty() { 0 } else { EXIT_INFEASIBLE })
}
