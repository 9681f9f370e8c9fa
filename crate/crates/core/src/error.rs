use alloc::string::String;

/// Errors produced by the estimation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("boundary statistics: {0}")]
    BoundaryStatistics(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("root not bracketed in [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("all candidate bandwidths give -inf held-out log-likelihood; use a kernel with unbounded support such as gaussian")]
    DegenerateCrossValidation,

    #[error("effective sample size collapsed ({ess:.2} of {samples}); reduce the step size")]
    EssCollapse { ess: f64, samples: usize },

    #[error("histogram mismatch: {0}")]
    HistogramMismatch(String),
}

pub type Result<T> = core::result::Result<T, Error>;
