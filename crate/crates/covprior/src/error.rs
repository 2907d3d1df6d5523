use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix that must be positive definite failed its Cholesky
    /// factorization (non-positive pivot) or carried non-finite entries.
    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Degrees of freedom too small for the dimension (requires nu > d - 1).
    #[error("invalid degrees of freedom nu={nu} for dimension d={d} (need nu > d - 1)")]
    InvalidDegreesOfFreedom { nu: f64, d: usize },

    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter vector whose tag or length does not match the prior.
    #[error("parameter layout mismatch: {0}")]
    LayoutMismatch(String),

    /// A variance that must be positive was (numerically) zero.
    #[error("zero variance: {0}")]
    ZeroVariance(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A count table entry was negative.
    #[error("negative count at line {line}: {value}")]
    NegativeCount { line: usize, value: f64 },

    /// Step-size adaptation collapsed.
    #[error("adaptation failure: {0}")]
    AdaptationFailure(String),

    /// A gradient component was NaN while the primal value was finite.
    #[error("non-finite gradient component {index} at finite value")]
    NonFiniteGradient { index: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
