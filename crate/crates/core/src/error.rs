use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum NomError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular support at point {point}: reciprocal condition {rcond:.3e} (neighbors {neighbors}, terms {terms})")]
    SingularSupport {
        point: usize,
        rcond: f64,
        neighbors: usize,
        terms: usize,
    },

    #[error("inverted material state at point {point}: J = {jacobian:.6e}")]
    InvertedElement { point: usize, jacobian: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("reference field has zero norm")]
    ZeroReference,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NomError>;

impl NomError {
    /// Attaches the load step and iteration to solver failures raised inside Newton loops.
    pub(crate) fn with_context(self, step: usize, iter: usize) -> Self {
        match self {
            NomError::SolveFailed(m) => {
                NomError::SolveFailed(format!("step {step}, iter {iter}: {m}"))
            }
            NomError::NoConvergence(m) => {
                NomError::NoConvergence(format!("step {step}, iter {iter}: {m}"))
            }
            other => other,
        }
    }
}
