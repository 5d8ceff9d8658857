use thiserror::Error;

/// Failure modes shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    /// The caller supplied data that violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An iteration failed to converge or produced a non-finite or non-SPD intermediate.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(GeoError::InvalidInput(msg.into()))
}

pub(crate) fn numerical<T>(msg: impl Into<String>) -> Result<T> {
    Err(GeoError::NumericalFailure(msg.into()))
}
