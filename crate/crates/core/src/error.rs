use thiserror::Error;

/// Errors produced by the solvers, the oracle and the file readers.
#[derive(Debug, Error)]
pub enum FlsaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An internal consistency check failed. Always a bug in the engine.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("no convergence after {iterations} iterations (duality gap {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FlsaError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(FlsaError::InvalidArgument(msg.into()))
}

pub(crate) fn invariant<T>(msg: impl Into<String>) -> Result<T> {
    Err(FlsaError::Invariant(msg.into()))
}
