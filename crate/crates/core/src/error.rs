use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum DisfomError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An iterative routine hit its iteration cap.
    #[error("{routine} did not converge after {iterations} iterations (residuals: {primal:.3e}, {dual:.3e})")]
    NotConverged { routine: &'static str, iterations: usize, primal: f64, dual: f64 },

    #[error("estimator state error: {0}")]
    State(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed instance file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DisfomError>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(DisfomError::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(DisfomError::InvalidArgument(format!("{name} has non-finite entries")))
    }
}
