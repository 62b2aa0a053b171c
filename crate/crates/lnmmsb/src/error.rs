//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors produced by model construction, inference, evaluation and I/O.
///
/// Variants are grouped by how the command-line tool reports them:
/// argument problems exit with code 1, data problems with code 2 and
/// numerical failures with code 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument or configuration value is invalid
    /// (bad flag combination, nonsensical option value).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data is malformed or inconsistent (parse failures, dimension
    /// mismatches between files, out-of-range indices).
    #[error("invalid data: {0}")]
    Data(String),

    /// A numerical operation failed beyond recovery (factorization of an
    /// indefinite matrix after jitter retries, degenerate importance
    /// weights, non-finite objective).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Underlying file-system failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code the command-line tool uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::Data(_) | Error::Io(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}
