//! Batch front end: run configurations, dispatch, and deterministic output.

mod config;
mod runner;

pub use config::{
    parse_config, parse_config_str, CertifySpec, Command, ControlSpec, FamilySpec, GeometrySpec, InitialSpec,
    KernelSpec, ModeSpec, RootsSpec, RunConfig, SimulateSpec, SolverChoice, StabilitySpec, TimeSpec,
};
pub use runner::{compute, run, FileRecord, RunManifest};

use thiserror::Error;

/// Failure classes of a run, each with its own process exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid configuration at `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Parse { .. } => 2,
            CliError::Validation { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub(crate) fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation { key: key.into(), message: message.into() }
    }
}
