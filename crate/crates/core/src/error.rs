use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A rate specification violates one of the hypotheses of the rate calculus.
    #[error("invalid rate specification: {0}")]
    InvalidRateSpec(String),

    #[error("could not parse fraction {0:?}")]
    ParseFraction(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    IndefiniteCovariance(f64),

    #[error("design matrix is singular after {attempts} attempts")]
    SingularDesign { attempts: usize },

    #[error("minimizer stayed on the search-box boundary after {widenings} widenings")]
    SearchBoxBoundary { widenings: usize },

    #[error("{fraction:.4} of Chernoff argmax draws hit the horizon; enlarge T")]
    HorizonHit { fraction: f64 },

    #[error("score linearization failed the finite-difference check: {0}")]
    LinearizationCheck(String),

    #[error("cannot fit a rate: {0}")]
    RateFit(String),

    #[error("{failed} of {total} replicates failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
