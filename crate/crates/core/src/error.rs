use thiserror::Error;

/// Errors raised by family construction, projections, quadrature and bound evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mean {mean:?} is outside the interior of the mean space of {family}")]
    MeanOutOfRange { family: String, mean: Vec<f64> },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("family {0} does not have discrete support")]
    NotDiscrete(String),

    #[error("enumeration needs {needed} outcomes, cap is {cap}")]
    TooLarge { needed: u128, cap: usize },

    #[error("mean set does not intersect the mean space: {0}")]
    InfeasibleSet(String),

    #[error("mean set is not separated from the null mean: {0}")]
    Degenerate(String),

    #[error("no mean on side {sign} reaches divergence {divergence} (supremum {supremum})")]
    NoSuchRadius {
        divergence: f64,
        sign: i8,
        supremum: f64,
    },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("root is not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("estimator undefined at the origin: no ray direction")]
    OriginRay,

    #[error("dimension {0} is not supported here")]
    UnsupportedDimension(usize),

    #[error("boundary leaves the interior of the mean space: {0}")]
    NotNice(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid mean set: {0}")]
    InvalidMeanSet(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
