//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants map one-to-one onto CLI exit codes (see [`Error::exit_code`]),
/// so every failure category is distinguishable from a shell script.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value or flag combination.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure (missing file, permission, short write).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed dataset, ledger or checkpoint content.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A caller violated an API precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Weak-supervision split cannot be built as requested.
    #[error("split error: {0}")]
    Split(String),

    /// Synthetic-anomaly injection cannot proceed.
    #[error("injection error: {0}")]
    Injection(String),

    /// A numeric quantity became non-finite.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A metric is undefined for the given inputs (e.g. single-class AUROC).
    #[error("metric error: {0}")]
    Metric(String),
}

impl Error {
    /// Stable process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 3,
            Error::Io(_) => 4,
            Error::Parse { .. } => 5,
            Error::Contract(_) => 6,
            Error::Split(_) => 7,
            Error::Injection(_) => 8,
            Error::Numeric(_) => 9,
            Error::Metric(_) => 10,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
