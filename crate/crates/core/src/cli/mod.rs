//! File loading, `--set` overrides and the commands behind the `pgnmpc`
//! binary.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | at least one suite criterion failed |
//! | 2 | command-line usage error |
//! | 3 | configuration error (missing or invalid file, bad override) |
//! | 4 | solver divergence or other numerical failure |
//! | 5 | output could not be written |

mod commands;
mod manifest;

use std::fmt;

pub use commands::{cmd_compare_iterations, cmd_run, cmd_suite, CompareSummary, RunSummary};
pub use manifest::{apply_overrides, RunManifest, DEFAULT_PATIENT_JSON};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    SuiteFailure = 1,
    Usage = 2,
    Config = 3,
    Divergence = 4,
    Io = 5,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// A failed command: what to print and which exit code to use.
#[derive(Debug)]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    pub fn new(status: ExitStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ExitStatus::Config, message)
    }

    /// Output-side failure, labelled with what was being written.
    pub fn io(what: impl fmt::Display, error: impl fmt::Display) -> Self {
        Self::new(ExitStatus::Io, format!("cannot write {what}: {error}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::Shape(_) | Error::Domain(_) | Error::Json(_) => {
                ExitStatus::Config
            }
            Error::Divergence { .. }
            | Error::StepSize { .. }
            | Error::NonConvex { .. }
            | Error::Numerical(_) => ExitStatus::Divergence,
            Error::Io(_) | Error::Csv(_) => ExitStatus::Io,
        };
        CliError::new(status, e.to_string())
    }
}
