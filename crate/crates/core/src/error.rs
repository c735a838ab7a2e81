use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degree {degree} is not valid in dimension {n}")]
    InvalidDegree { degree: usize, n: usize },

    #[error("ambient dimension {0} outside the supported range 1..=8")]
    UnsupportedDimension(usize),

    #[error("invalid multi-index {0:?}")]
    InvalidIndex(Vec<usize>),

    #[error("metric is not positive definite")]
    NotPositiveDefinite,

    #[error("input vectors are linearly dependent (vector {index}, residual {residual:e})")]
    RankDeficient { index: usize, residual: f64 },

    #[error("operation requires a {expected} structure")]
    WrongCase { expected: &'static str },

    #[error("invalid structure data: {0}")]
    InvalidStructure(String),

    #[error("degenerate form: {0}")]
    Degenerate(String),

    #[error("parameter point {0:?} lies outside the patch domain")]
    OutsideDomain(Vec<f64>),

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("vector field is not tangent to the patch (normal part {residual:e})")]
    NotTangent { residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
