//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user-supplied data (coordinates out of range, malformed rows, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Parameter outside its valid domain (e.g. alpha > 1).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Numerical failure (factorization breakdown, non-finite intensity, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Malformed or inconsistent run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for user errors, 2 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
