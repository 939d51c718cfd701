use std::path::PathBuf;

use smoothcall_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("unsupported document version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const SOLVER: i32 = 2;
    pub const USAGE: i32 = 64;
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, message: message.into() }
    }

    /// Solver and numerical failures map to 2, detected arbitrage to 1,
    /// everything else to 64.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Model(CoreError::Calibration { .. } | CoreError::Numeric(_) | CoreError::TensorCap { .. }) => exit::SOLVER,
            Error::Model(CoreError::Arbitrage { .. }) => exit::CHECK_FAILED,
            _ => exit::USAGE,
        }
    }
}
