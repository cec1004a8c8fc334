use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("polyhedron is unbounded")]
    Unbounded,

    #[error("polytope is empty")]
    EmptyPolytope,

    #[error("polytope is not full-dimensional (affine dimension {affine_dim} < {ambient})")]
    NotFullDimensional { affine_dim: usize, ambient: usize },

    #[error("invalid fan: {0}")]
    InvalidFan(String),

    #[error("unknown standard fan {0:?}")]
    UnknownFan(String),

    #[error("divisor is not nef")]
    NotNef,

    #[error("divisor is not big")]
    NotBig,

    #[error("divisor is not ample")]
    NotAmple,

    #[error("divisor is not effective")]
    NotEffective,

    #[error("metrics live on different divisors")]
    DivisorMismatch,

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("point {0:?} lies outside the polytope")]
    OutsidePolytope(Vec<f64>),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("negative Monge-Ampere density {value:e} at u = {at:?}")]
    ConcavityViolation { at: Vec<f64>, value: f64 },

    #[error("integrand returned NaN at node {0:?}")]
    NanIntegrand(Vec<f64>),

    #[error("integrand growth rate {growth} is not dominated by the density decay rate {decay}")]
    NonIntegrable { growth: f64, decay: f64 },

    #[error("invalid rational {0:?}")]
    ParseRational(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
