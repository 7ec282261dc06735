//! Crate-wide error type.
//!
//! One enum covers the whole pipeline so CLI exit codes can be derived
//! mechanically: `Divergence` maps to exit code 2, everything else to 1.

use std::fmt;
use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A tensor axis did not have the expected extent.
    Dimension {
        op: &'static str,
        axis: &'static str,
        expected: usize,
        got: usize,
    },
    /// A hyperparameter or layer configuration is invalid.
    Config(String),
    /// A text input could not be parsed.
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    /// A sample value is unusable (non-finite, etc.); `index` locates it.
    Data { index: usize, reason: String },
    /// The signal record is shorter than one training window.
    DatasetTooSmall { len: usize, needed: usize },
    /// Normalization statistics are undefined for the given extent.
    DegenerateStats(String),
    /// A checkpoint file is malformed; `offset` is the byte position.
    Format { offset: u64, reason: String },
    /// Training produced a non-finite value.
    Divergence {
        what: String,
        epoch: usize,
        step: u64,
    },
    /// An operation received no data.
    EmptyInput(&'static str),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                op,
                axis,
                expected,
                got,
            } => write!(f, "{op}: {axis} axis mismatch: expected {expected}, got {got}"),
            Error::Config(reason) => write!(f, "invalid configuration: {reason}"),
            Error::Parse { path, line, reason } => {
                write!(f, "{}:{line}: {reason}", path.display())
            }
            Error::Data { index, reason } => write!(f, "bad sample at index {index}: {reason}"),
            Error::DatasetTooSmall { len, needed } => {
                write!(f, "record has {len} samples, need at least {needed}")
            }
            Error::DegenerateStats(reason) => write!(f, "degenerate statistics: {reason}"),
            Error::Format { offset, reason } => {
                write!(f, "checkpoint format error at byte {offset}: {reason}")
            }
            Error::Divergence { what, epoch, step } => {
                write!(f, "training diverged at epoch {epoch}, step {step}: {what}")
            }
            Error::EmptyInput(what) => write!(f, "{what}: empty input"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
