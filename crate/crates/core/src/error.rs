use thiserror::Error;

use crate::lp::LpError;

/// Errors produced by the channel toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Pauli label: {0}")]
    InvalidLabel(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("estimation failed: {0}")]
    Estimation(#[from] LpError),

    #[error("scaling fit failed: {0}")]
    Fit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidLabel(_)
                | Error::Shape(_)
                | Error::InvalidParameter(_)
                | Error::InvalidDistribution(_)
                | Error::Precondition(_)
                | Error::Config(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
