use thiserror::Error;

use crate::expr::{DomainError, ParseError};

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Domain(#[from] DomainError),

    #[error("metric is not positive definite at {}", fmt_point(.point))]
    Degenerate { point: Vec<f64> },

    #[error("point {} is not admissible", fmt_point(.point))]
    Inadmissible { point: Vec<f64> },

    #[error("validity violated at {}: g-norm of the 1-form is {norm} (must be < 1)", fmt_point(.point))]
    Validity { point: Vec<f64>, norm: f64 },

    #[error("tangent vector must be non-zero")]
    ZeroVector,

    #[error("1-form is not closed: |d sigma| = {residual:e} at {}", fmt_point(.point))]
    NotClosed { point: Vec<f64>, residual: f64 },

    #[error("transformed metric is not positive on unit vectors at {}", fmt_point(.point))]
    Positivity { point: Vec<f64> },

    #[error("singular Jacobian at {}", fmt_point(.point))]
    SingularJacobian { point: Vec<f64> },

    #[error("degenerate plane: Gram determinant {gram:e}")]
    DegeneratePlane { gram: f64 },

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown gallery instance '{0}'")]
    UnknownInstance(String),

    #[error("problem file: {0}")]
    Problem(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}
