//! Library generator and command-line tools for bitslice floating point.
//!
//! The `bfp` binary is a thin wrapper over these modules:
//!
//! * `bfp gen`: [`config`] + [`generate`]
//! * `bfp verify`: [`verify`]
//! * `bfp bench`: [`bench`]
//! * `bfp transpose`: [`transpose`]

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub mod bench;
pub mod config;
pub mod generate;
pub mod transpose;
pub mod verify;

/// Lane width used when neither the config file nor the environment sets one.
pub const DEFAULT_LANE_WIDTH: usize = 256;
/// Environment variable overriding [`DEFAULT_LANE_WIDTH`].
pub const LANE_WIDTH_ENV: &str = "BFP_LANE_WIDTH";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        source: config::ConfigError,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Generate(#[from] generate::GenerateError),
    #[error(transparent)]
    Check(#[from] bfp_core::check::CheckError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}

/// Config value, then `BFP_LANE_WIDTH`, then the default.
pub fn resolve_lane_width(from_config: Option<usize>, env: Option<&str>) -> Result<usize, CliError> {
    if let Some(w) = from_config {
        return Ok(w);
    }
    match env {
        Some(text) => config::parse_lane_width(text.trim())
            .map_err(|reason| CliError::Usage(format!("{LANE_WIDTH_ENV}={text}: {reason}"))),
        None => Ok(DEFAULT_LANE_WIDTH),
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &std::path::Path) -> Result<config::ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    config::parse_config(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}
