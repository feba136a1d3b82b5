//! Error types shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A requested matrix dimension is over the configured cap.
    #[error("dimension {requested} exceeds the configured maximum {max}")]
    DimensionLimit { requested: usize, max: usize },

    /// A bipartition does not factor the dimension it annotates.
    #[error("bipartition {dim_a}x{dim_b} does not match dimension {dim}")]
    BipartitionMismatch {
        dim_a: usize,
        dim_b: usize,
        dim: usize,
    },

    /// Two operands disagree on dimension or shape.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// Input to the eigensolver is not Hermitian within tolerance.
    #[error("matrix is not Hermitian: max |x - x'| = {residual:.3e}")]
    NotHermitian { residual: f64 },

    /// The eigensolver ran out of iterations.
    #[error("eigensolver did not converge: off-diagonal residual {residual:.3e}")]
    EigNonConvergence { residual: f64 },

    /// The state's partial transpose has a negative eigenvalue, so the
    /// transposed model would not be a valid quantum state.
    #[error("state is not PPT: partial transpose has minimum eigenvalue {min_eigenvalue:.3e}")]
    NotPpt { min_eigenvalue: f64 },

    /// A structural invariant failed at construction or validation time.
    #[error("{check} violated: residual {residual:.3e}")]
    InvariantViolation { check: String, residual: f64 },

    /// Parameter outside the documented domain.
    #[error("invalid parameter: {0}")]
    Domain(String),

    /// A scenario would exceed a documented capacity cap.
    #[error("capacity exceeded: {what} = {value} is over the limit {max}")]
    Capacity {
        what: String,
        value: usize,
        max: usize,
    },

    /// Behavior tables with incompatible shapes.
    #[error("behavior table shapes differ")]
    ShapeMismatch,
}

impl Error {
    pub fn invariant(check: impl Into<String>, residual: f64) -> Self {
        Error::InvariantViolation {
            check: check.into(),
            residual,
        }
    }
}
