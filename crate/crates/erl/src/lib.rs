//! Command-line runner for escape-rate and extremal-index experiments:
//! scenario configs, deterministic runs and CSV/JSON artifacts.

pub mod cli;
pub mod config;
pub mod output;
pub mod scenarios;

use std::fmt;

pub use config::{Overrides, Resolved, Scenario, ScenarioConfig};
pub use output::Report;

/// Exit code when every check passes.
pub const EXIT_OK: u8 = 0;
/// Exit code for usage, config and setup errors.
pub const EXIT_USAGE: u8 = 1;
/// Exit code when the run completed but a check failed.
pub const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Compute(erl_core::Error),
    Io(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Compute(e) => write!(f, "{e}"),
            RunError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<erl_core::Error> for RunError {
    fn from(e: erl_core::Error) -> Self {
        RunError::Compute(e)
    }
}

/// Runs one scenario and writes its artifacts.
pub fn run(resolved: &Resolved) -> Result<Report, RunError> {
    let report = scenarios::run(resolved)?;
    output::write_artifacts(resolved, &report)?;
    Ok(report)
}
