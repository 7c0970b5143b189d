use thiserror::Error;

/// Errors raised by the kernel, smad, qip and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BpgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix {index} is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { index: usize, asymmetry: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("empty measurement list")]
    EmptyMeasurements,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("sparsity level {s} out of range for dimension {d}")]
    SparsityOutOfRange { s: usize, d: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero vector has no truncation maximizer")]
    ZeroVector,

    #[error("step size violates 0 < lambda*L < 1 (lambda = {lambda:e}, L = {l:e})")]
    InvalidStep { lambda: f64, l: f64 },

    #[error("kernel pairing is not certified; supply an explicit smad constant")]
    UncertifiedPairing,

    #[error(
        "sufficient decrease violated at iteration {iteration}: \
         lambda*(psi_prev - psi_next) = {lhs:e} < (1 - lambda*L)*D_h = {rhs:e}"
    )]
    DecreaseViolation { iteration: usize, lhs: f64, rhs: f64 },

    #[error("prox map returned an infeasible or non-finite point at iteration {0}")]
    NonFiniteIterate(usize),

    #[error("iterate norm {norm:e} exceeds divergence threshold at iteration {iteration}")]
    Divergence { iteration: usize, norm: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, BpgError>;
