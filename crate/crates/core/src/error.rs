use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("matrix is not positive definite (jitter ceiling {ceiling:e} reached)")]
    NotPositiveDefinite { ceiling: f64 },

    #[error("overflow in {func} at x = {x:e}")]
    Overflow { func: &'static str, x: f64 },

    #[error("quantile requested at infinite tail (u = {u})")]
    InfiniteTail { u: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("{file}: row {row}, column {column}: {message}")]
    Ingest {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    /// True for errors caused by malformed or inconsistent input files.
    pub fn is_ingestion(&self) -> bool {
        matches!(self, Error::Ingest { .. } | Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
