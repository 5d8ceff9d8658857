//! Library half of the `gaussgeo` command-line tool.
//!
//! [`execute`] runs a parsed command and returns the text destined for
//! stdout, so the binary stays a thin shell around it.

pub mod args;
pub mod commands;
pub mod dataset;
pub mod output;

use gaussgeo_core::GeoError;
use thiserror::Error;

pub use args::{Cli, Command};
pub use commands::execute;

/// Failure classes mapped onto process exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed files, unwritable outputs.
    #[error("input error: {0}")]
    Input(String),
    /// A numerical routine failed on valid input.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<GeoError> for CliError {
    fn from(e: GeoError) -> Self {
        match e {
            GeoError::InvalidInput(m) => CliError::Input(m),
            GeoError::NumericalFailure(m) => CliError::Numerical(m),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Sizes the global rayon pool from the `GAUSSGEO_THREADS` value, if any.
pub fn configure_threads(value: Option<&str>) -> CliResult<()> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("GAUSSGEO_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot size the thread pool: {e}")))
}
