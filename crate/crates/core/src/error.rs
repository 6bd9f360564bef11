use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("composite dimension {dim} exceeds the configured maximum {max}")]
    Size { dim: usize, max: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    /// All four theorem conditions evaluated true at once.
    #[error("theorem violation: {0}")]
    TheoremViolation(String),

    #[error("channel is not of the form |x> -> |perm(x)> (x) U_x (residual {residual:.3e})")]
    NormalForm { residual: f64 },

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
