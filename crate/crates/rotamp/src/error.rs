use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series argument {x} outside the certified radius {radius}")]
    RadiusExceeded { x: f64, radius: f64 },
    #[error("argument {z} lies inside the support (sup = {sup})")]
    OutOfDomain { z: f64, sup: f64 },
    #[error("target {target} is outside the range (0, {max}) of the monotone branch")]
    InverseOutOfRange { target: f64, max: f64 },
    #[error("signal strength is below the spectral transition: {0}")]
    BelowTransition(String),
    #[error("quantile sampling unavailable: {0}")]
    QuantileUnavailable(String),
    #[error("need at least {needed} spectrum entries, got {got}")]
    TooFewEntries { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need {needed} cumulants, have {available}")]
    InsufficientCumulants { needed: usize, available: usize },
    #[error("need partial-moment coefficients up to {0}")]
    InsufficientCoefficients(String),
    #[error("non-finite or divergent iterate at step {t}")]
    NonFiniteIterate { t: usize },
    #[error("noise variance must be positive, got {0}")]
    DegenerateNoise(f64),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("quadrature produced a non-finite value: {0}")]
    QuadratureFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
