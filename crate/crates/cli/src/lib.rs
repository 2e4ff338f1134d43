//! Experiment harness: strict run configs, experiment dispatch, CSV tables
//! and a JSON manifest per run.

pub mod config;
pub mod experiments;
pub mod output;

use std::fmt;
use std::path::{Path, PathBuf};

pub use config::{parse_config, ConfigError, Experiment, RunConfig};
pub use output::{CheckRecord, RunManifest, Status};

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => e.fmt(f),
            HarnessError::Runtime(e) => write!(f, "runtime error: {e:#}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl HarnessError {
    pub fn status(&self) -> Status {
        match self {
            HarnessError::Config(_) => Status::ConfigError,
            HarnessError::Runtime(_) => Status::RuntimeError,
        }
    }
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<qkpz_core::Error> for HarnessError {
    /// Errors caused by the values a config asked for count as config errors.
    fn from(e: qkpz_core::Error) -> Self {
        use qkpz_core::Error as E;
        match e {
            E::Config(_) | E::Size(_) | E::Domain(_) | E::Index(_) => {
                HarnessError::Config(ConfigError::new("", e.to_string()))
            }
            other => HarnessError::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for HarnessError {
    fn from(e: anyhow::Error) -> Self {
        HarnessError::Runtime(e)
    }
}

/// Result of [`run`]: the manifest (already written) and its location.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: Option<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.manifest.status.exit_code()
    }
}

fn write_tables(dir: &Path, tables: &[output::Table]) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(tables.len());
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        output::write_atomic(&path, &t.to_bytes()?)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Runs one experiment, writes its CSV files and manifest into `dir`.
/// Failures of the run itself are recorded in the manifest, not returned.
pub fn run(config: &RunConfig, dir: &Path) -> RunOutcome {
    let started = output::unix_now();
    let mut manifest = RunManifest {
        config: Some(config.clone()),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: started,
        status: Status::Pass,
        checks: Vec::new(),
        notes: Vec::new(),
        outputs: Vec::new(),
        error: None,
    };
    let result = config::validate(config)
        .map_err(HarnessError::from)
        .and_then(|_| experiments::run_experiment(config))
        .and_then(|outcome| {
            let paths = write_tables(dir, &outcome.tables)?;
            Ok((outcome, paths))
        });
    match result {
        Ok((outcome, paths)) => {
            manifest.status = if outcome.checks.iter().all(|c| c.pass) {
                Status::Pass
            } else {
                Status::Fail
            };
            manifest.checks = outcome.checks;
            manifest.notes = outcome.notes;
            manifest.outputs = paths;
        }
        Err(e) => {
            manifest.status = e.status();
            manifest.error = Some(e.to_string());
        }
    }
    manifest.finished_unix = output::unix_now();
    let manifest_path = match output::write_manifest(dir, &manifest) {
        Ok(p) => Some(p),
        Err(e) => {
            log::error!("could not write manifest: {e:#}");
            manifest.status = Status::RuntimeError;
            manifest.error.get_or_insert_with(|| format!("manifest not written: {e:#}"));
            None
        }
    };
    RunOutcome {
        manifest,
        manifest_path,
    }
}
