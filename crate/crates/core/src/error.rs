use thiserror::Error;

/// Errors produced anywhere in the learning, prediction and IO pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("{context}: need at least {needed} samples, found {found}")]
    TooShort {
        context: String,
        needed: usize,
        found: usize,
    },

    #[error("point {index} lies {distance:.3} m from the reference path (corridor {corridor} m)")]
    OutsideCorridor {
        index: usize,
        distance: f64,
        corridor: f64,
    },

    #[error("trajectory Hessian is not positive definite ({0}); increase hessian_reg")]
    NotPositiveDefinite(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("gaussian kernel {0} received no demonstrations")]
    EmptyCluster(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("row {row}: {message}")]
    Schema { row: usize, message: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("unsupported archive format_version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
