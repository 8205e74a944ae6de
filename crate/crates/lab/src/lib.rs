//! Experiment driver: robustness sweeps, subdomain scaling and coarse-space
//! approximation studies configured from TOML files, with CSV and VTK
//! output.

pub mod config;
pub mod experiments;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use geneo_core::GeneoError;

pub use config::ExperimentConfig;
pub use experiments::{run_experiment, RunOptions, Summary};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("referenced file does not exist: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] GeneoError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
        let path = path.into();
        move |source| LabError::Io { path, source }
    }
}

/// Worker cap from `GENEO_LAB_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("GENEO_LAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
