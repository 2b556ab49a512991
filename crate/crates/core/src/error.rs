use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid Lorentz force: {0}")]
    InvalidForce(String),

    #[error("unsupported force for this solver: {0}")]
    UnsupportedForce(String),

    #[error("degenerate force: {0}")]
    DegenerateForce(String),

    #[error("force is exact: {0}")]
    ExactForce(String),

    #[error("infinite period (modulus k = 1)")]
    InfinitePeriod,

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("no periodicity certificate: {0}")]
    NoCertificate(String),

    #[error("time grids differ: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
