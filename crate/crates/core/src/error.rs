use thiserror::Error;

/// Errors raised by the evaluators, constructions and limit estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evaluation point is not inside the smooth window of the field (margin {margin})")]
    NonSmoothPoint { margin: f64 },

    #[error("tail descriptor does not certify membership in L_sigma: {0}")]
    DivergentTail(String),

    #[error("quadrature tolerance not met: error estimate {err_est:e} exceeds {tolerance:e}")]
    ToleranceNotMet { err_est: f64, tolerance: f64 },

    #[error("field has no radial profile")]
    NotRadial,

    #[error("point with |x| = {norm} is not inside the ball of radius {radius}")]
    PointOutsideBall { norm: f64, radius: f64 },

    #[error("kernel is singular at x: |x| = {norm} but the integrand support starts at {inner}")]
    SingularKernel { norm: f64, inner: f64 },

    #[error("radius {radius} is too small, need at least {required}")]
    RadiusTooSmall { radius: f64, required: f64 },

    #[error("limit did not converge: {0}")]
    NonConvergent(String),

    #[error("gradient lower bound failed on the shifted ball: min |grad K| = {min_grad:e} < c5 = {c5:e}")]
    DeltaSearchFailed { min_grad: f64, c5: f64 },

    #[error("dimension {0} is not supported by this evaluator")]
    UnsupportedDimension(usize),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
