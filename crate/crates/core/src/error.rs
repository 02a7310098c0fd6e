use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("degenerate spectral density: {0}")]
    DegenerateDensity(String),

    #[error("matrix is not positive definite at {bits} bits ({context}); increase precision-bits")]
    NotPositiveDefinite { bits: usize, context: String },

    #[error("spline order {order} exceeds the stability limit {limit}")]
    OrderTooLarge { order: usize, limit: usize },

    #[error("negative mean-square error {value:e} (tolerance {tolerance:e}); precision failure")]
    NegativeMse { value: f64, tolerance: f64 },

    #[error("interval [{a}, {b}] is not admissible: {reason}")]
    BadInterval { a: f64, b: f64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("nonpositive error value {value:e} at n = {n}")]
    NonpositiveError { n: f64, value: f64 },

    #[error("path covariance is not positive definite; raise the jitter ({0})")]
    CovarianceNotPd(String),

    #[error("point {0} is not part of the ensemble")]
    PointNotInEnsemble(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures caused by the numerics rather than by the request.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::InvalidInput(_) | Error::BadInterval { .. } => false,
            Error::Context { source, .. } => source.is_numerical(),
            _ => true,
        }
    }

    pub fn context(self, what: impl Into<String>) -> Self {
        Error::Context {
            context: what.into(),
            source: Box::new(self),
        }
    }
}
