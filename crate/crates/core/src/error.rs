use thiserror::Error;

/// Errors reported by the geometry kernels and solvers.
#[derive(Debug, Error)]
pub enum StiefelError {
    /// Input violates a precondition (shape, range, or constraint tolerance).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested quantity is not defined for these parameters.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A numerical procedure left its validity domain (NaN/Inf, lost bracket).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, StiefelError>;

impl StiefelError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        StiefelError::InvalidInput(msg.into())
    }

    pub fn not_applicable(msg: impl Into<String>) -> Self {
        StiefelError::NotApplicable(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        StiefelError::NumericalFailure(msg.into())
    }
}
