use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ViError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value encountered at iteration {k}")]
    NumericalDivergence { k: usize },

    #[error("step size search failed after {trials} backtracks (last beta = {beta:e})")]
    StepSizeFailure { trials: usize, beta: f64 },

    #[error("perturbation schedule `{got}` is not usable here (expected {expected})")]
    WrongScheduleKind { expected: &'static str, got: &'static str },

    #[error("oracle failed: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, ViError>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(ViError::DimensionMismatch { expected, got })
    }
}
