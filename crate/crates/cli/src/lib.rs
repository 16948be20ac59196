//! Command-line front end for `cvqkd`: distance scans, cutoff optimisation
//! and Monte Carlo validation, all emitting plain-text artifacts.
//!
//! Scan and optimize write CSV preceded by one `#` header line that names
//! the schema version and every input that affects the numbers. Output is
//! byte-identical for identical config and seed regardless of worker count.

pub mod commands;
pub mod config;

use thiserror::Error;

pub use config::RunConfig;

/// Version written in the first line of every CSV and report.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Math(#[from] cvqkd::Error),
    #[error("{failed} validation check(s) failed")]
    Validation { failed: usize },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 config (including unreadable/unwritable files), 2 math/domain,
    /// 3 validation failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Math(_) => 2,
            CliError::Validation { .. } => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Math(_) => "math",
            CliError::Validation { .. } => "validation",
        }
    }
}
