//! Experiment runner for DUST: configuration, single runs with CSV and
//! manifest output, and parallel parameter sweeps.

pub mod config;
pub mod runner;
pub mod sweep;

pub use config::ExperimentConfig;
pub use runner::{run_experiment, RunOutcome};
pub use sweep::{sweep, Axis, SweepReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("numeric failure: {0}")]
    Numeric(dust_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 2 config (including unusable paths), 3 assumption
    /// violation, 4 numeric failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Assumption(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Assumption(m) => m.clone(),
            other => other.to_string(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<dust_core::Error> for CliError {
    fn from(e: dust_core::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}
