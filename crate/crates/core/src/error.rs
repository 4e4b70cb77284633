use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scheme {scheme} is not supported for {equation}")]
    UnsupportedScheme { scheme: String, equation: String },

    #[error("non-finite state at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last delta {last_delta:e})")]
    NoConvergence { iterations: usize, last_delta: f64 },

    #[error("theta function near zero ({value:e}) at evaluation point")]
    ThetaDegenerate { value: f64 },

    #[error("theta series does not converge: Riemann matrix is not negative definite")]
    ThetaNotConvergent,

    #[error("insufficient data for fit: need at least {needed} points, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("reference construction failed: {0}")]
    Reference(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
