//! Scenario runner behind the `nodecount` binary: scenario files, reports,
//! the `(n_q, n_c)` grid and the CSV tables.

pub mod grid;
pub mod scenario;
pub mod tables;

use std::fmt;

pub use grid::{grid_csv, run_grid, GridMode, GridRow};
pub use scenario::{
    load_scenario, run_scenario, Adversary, ExperimentReport, Reading, Scenario, Shots,
};
pub use tables::{landscape_csv, oracle_check, oracle_csv, thresholds_csv, OracleRow};

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit 2).
    Config(String),
    /// A resource cap was hit (exit 3).
    Resource(String),
    /// A check ran and failed (exit 1).
    CheckFailed(String),
    /// Reading or writing files (exit 1).
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Resource(_) => 3,
            CliError::CheckFailed(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<nodecount::Error> for CliError {
    fn from(e: nodecount::Error) -> Self {
        match e {
            nodecount::Error::ResourceCap { .. } => CliError::Resource(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Formats an optional number for CSV: empty when absent.
pub(crate) fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
