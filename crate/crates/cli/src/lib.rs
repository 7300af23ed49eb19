//! Experiment drivers behind the `osmp` command: analytical sweeps,
//! simulation batches, the model-versus-simulation check and parameter
//! studies. Every driver returns its rows in grid order and writes CSV.

pub mod experiments;
pub mod sweep;

pub use experiments::{
    analyze, simulate, summarize, validate, write_analyze, write_simulate, write_validate,
    AnalyzeRow, SimRow, SimSettings, ValidateRow,
};
pub use sweep::{run_sweep, SweepSpec};

use osmp_core::dtmc::DtmcError;
use osmp_core::sim::SimError;
use osmp_core::{load_config, ConfigError, NetworkConfig};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("analysis at load {load}: {source}")]
    Analysis { load: f64, source: DtmcError },
    #[error("simulation at load {load}, seed {seed}: {source}")]
    Simulation {
        load: f64,
        seed: u64,
        source: SimError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Loads, seeds and run length shared by every driver.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub loads: Vec<f64>,
    pub seeds: Vec<u64>,
    pub duration: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            loads: (1..=9).map(|i| f64::from(i) / 10.0).collect(),
            seeds: (1..=5).collect(),
            duration: 50.0,
        }
    }
}

impl Grid {
    pub fn check(&self) -> Result<(), CliError> {
        if self.loads.is_empty() {
            return Err(CliError::Usage("no loads given".into()));
        }
        if self.loads.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(CliError::Usage(format!(
                "loads must be finite and non-negative: {:?}",
                self.loads
            )));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Usage("no seeds given".into()));
        }
        if !(self.duration > 0.0) {
            return Err(CliError::Usage(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}

/// The reference configuration, or the document at `path`.
pub fn read_config(path: Option<&Path>) -> Result<NetworkConfig, CliError> {
    match path {
        None => Ok(NetworkConfig::reference()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok(load_config(&text)?)
        }
    }
}

/// Comma-separated list, e.g. `0.1,0.2` or `1,2,3`.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Usage(format!("cannot parse `{s}` in list `{text}`")))
        })
        .collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub(crate) fn create_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}
