use thiserror::Error;

/// Errors raised by kernels, geometry, and the analysis harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("rotation angle {angle} is within {margin:e} of pi; principal logarithm undefined")]
    LogBranch { angle: f64, margin: f64 },

    #[error("non-unique geodesic: points are antipodal or at rotation angle pi")]
    NonUniqueGeodesic,

    #[error("forest order {0} exceeds the enumeration guard of 8")]
    SizeGuard(usize),

    #[error("regularity exhausted: need {needed} derivatives, field provides {available}")]
    Regularity { needed: u32, available: u32 },

    #[error("unknown field family `{0}`")]
    UnknownFamily(String),

    #[error("reference flow did not converge to tolerance {tol:e} (last difference {last:e})")]
    Convergence { tol: f64, last: f64 },

    #[error("chart domain: {0}")]
    ChartDomain(String),

    #[error("ball violated: {0}")]
    BallViolated(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
