use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: non-finite entries, wrong shapes, unit-sphere violations.
    #[error("validation error: {0}")]
    Validation(String),
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical routine failed to converge or produced an unusable result.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The problem is too ill-conditioned to resolve at the requested tolerance.
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    /// A covariance model produced an invalid (non positive semidefinite) matrix.
    #[error("model error: {0}")]
    Model(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, got })
    }
}
