//! Experiment runner: configuration, Monte-Carlo sweeps, CSV and SVG output.

pub mod config;
pub mod emit;
pub mod plot;
pub mod sweep;

use std::path::PathBuf;

pub use config::{ExperimentConfig, Format, SweepVar};
pub use emit::{emit_beam_pattern, emit_csv, emit_summary, read_csv};
pub use plot::{emit_plot, Series};
pub use sweep::{run_single, run_sweep, SweepFailure, SweepOutcome, SweepRow};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] nfsec::Error),

    #[error("{0}")]
    Output(String),
}

impl CliError {
    /// Process exit code: 1 for configuration or usage errors, 2 for
    /// failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
