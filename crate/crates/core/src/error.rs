use thiserror::Error;

/// Errors raised while building datasets, problems and distributions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("labels take {count} distinct values; binary classification needs at most 2")]
    UnsupportedLabels { count: usize },

    #[error("row index {index} out of range for dataset with {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate sampling distribution: {0}")]
    DegenerateDistribution(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible configuration: {reason} (margin {margin:e})")]
    Infeasible { reason: String, margin: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
