//! Run manifests: everything needed to regenerate a set of CSV outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::jobs::{run_job, Job, JobOutput};

pub const MANIFEST_SUFFIX: &str = ".manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// CSV file names, relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub job: Job,
    /// Self-contained configuration snapshot (tables inlined).
    pub config: Config,
}

impl RunManifest {
    pub fn new(job: &Job, config: &Config, outputs: Vec<String>) -> Self {
        Self {
            tool: "wsa".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: job.command_name(),
            seed: job.seed(),
            outputs,
            job: job.clone(),
            config: config.clone(),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Manifest(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::Manifest(e.message().trim().to_string()))?;
        if m.command != m.job.command_name() {
            return Err(Error::Manifest(format!("command `{}` does not match job `{}`", m.command, m.job.command_name())));
        }
        if m.seed != m.job.seed() {
            return Err(Error::Manifest("seed does not match job".into()));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Re-executes the recorded job on the recorded configuration.
    pub fn rerun(&self) -> Result<JobOutput> {
        let resolved = self.config.resolve(Path::new("."))?;
        run_job(&self.job, &resolved)
    }
}

/// Manifest path written next to `csv`.
pub fn manifest_path_for(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}{MANIFEST_SUFFIX}"))
}

/// Writes every table and a manifest next to each; returns the CSV paths.
pub fn write_outputs(dir: &Path, job: &Job, config: &Config, output: &JobOutput) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let names: Vec<String> = output.tables.iter().map(|t| t.file_name()).collect();
    let manifest = RunManifest::new(job, config, names).to_toml_string()?;
    let mut written = Vec::new();
    for table in &output.tables {
        let path = dir.join(table.file_name());
        std::fs::write(&path, table.to_bytes()?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mpath = manifest_path_for(&path);
        std::fs::write(&mpath, &manifest).map_err(|e| Error::Io(format!("{}: {e}", mpath.display())))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jobs::Figure;

    #[test]
    fn round_trip_and_rerun() {
        let job = Job::Reproduce { figure: Figure::Fig4 };
        let cfg = Config::full_default();
        let resolved = cfg.resolve(Path::new(".")).unwrap();
        let out = run_job(&job, &resolved).unwrap();
        let m = RunManifest::new(&job, &cfg, vec!["fig4.csv".into()]);
        let back = RunManifest::from_toml_str(&m.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.rerun().unwrap(), out);
    }

    #[test]
    fn inconsistent_manifest_rejected() {
        let job = Job::AomCalibrate;
        let mut m = RunManifest::new(&job, &Config::default(), vec![]);
        m.command = "keyrate tf".into();
        assert!(RunManifest::from_toml_str(&m.to_toml_string().unwrap()).is_err());
        assert!(RunManifest::from_toml_str("tool = 1").is_err());
    }

    #[test]
    fn manifest_name() {
        assert_eq!(manifest_path_for(Path::new("out/fig5.csv")), PathBuf::from("out/fig5.manifest.toml"));
    }
}
