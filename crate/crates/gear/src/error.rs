use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GearError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: no header line")]
    MissingHeader { path: PathBuf },
    #[error("{path}: unsupported log format version {found} (expected {expected})")]
    FormatVersion { path: PathBuf, found: u32, expected: u32 },
    #[error("log integrity: {0}")]
    Integrity(String),
    #[error("config digest {found} does not match the log header ({expected})")]
    DigestMismatch { expected: String, found: String },
    #[error(transparent)]
    Core(#[from] gear_core::Error),
}

impl GearError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GearError::Io { path: path.into(), source }
    }

    pub fn config(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        GearError::Config { path: path.into(), message: message.into() }
    }

    /// Process exit code for this error: 2 for usage and configuration
    /// problems, 3 for I/O and log integrity problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            GearError::Config { .. } | GearError::Usage(_) | GearError::DigestMismatch { .. } => 2,
            GearError::Core(gear_core::Error::Config(_)) => 2,
            GearError::Io { .. }
            | GearError::Parse { .. }
            | GearError::MissingHeader { .. }
            | GearError::FormatVersion { .. }
            | GearError::Integrity(_)
            | GearError::Core(_) => 3,
        }
    }
}

pub type Result<T, E = GearError> = std::result::Result<T, E>;
