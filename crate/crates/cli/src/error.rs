use std::path::PathBuf;

use bohmflow_core::Error;

/// Exit status: 1 I/O or usage, 2 configuration, 3 numerical or
/// precondition failure, 4 verification tolerance exceeded.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: Error },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} checks exceeded their tolerance")]
    Tolerance { failed: usize, total: usize },
}

impl CliError {
    pub fn write(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Self::Write { path: path.to_path_buf(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::ReadConfig { .. } | Self::Config { .. } => 2,
            Self::Core(e) => match e {
                Error::InvalidGrid(_)
                | Error::InvalidUnits(_)
                | Error::InvalidPotential(_)
                | Error::InvalidInitialState(_)
                | Error::InvalidConfig(_) => 2,
                _ => 3,
            },
            Self::Write { .. } | Self::Usage(_) => 1,
            Self::Tolerance { .. } => 4,
        }
    }
}
