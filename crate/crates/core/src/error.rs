use alloc::string::String;
use core::fmt;

/// Errors reported by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain { what: String },
    /// A correlation profile violates positivity or knot ordering.
    InvalidProfile { reason: String },
    /// `rho_ni` left `(-1, 1)` at the given row index (1-based).
    CorrelationOutOfRange { index: usize, rho: f64 },
    /// A profile does not satisfy the hypothesis a result requires.
    RegimeMismatch { reason: String },
    /// An estimator could not produce a value.
    Estimation { reason: String },
    /// A fitted profile reached zero somewhere on `[0, 1]`.
    ConstraintViolation { reason: String },
    /// The information matrix is numerically singular.
    SingularInformation { direction: String },
    /// Adaptive quadrature gave up before reaching the tolerance.
    Quadrature { achieved: f64, requested: f64 },
    /// Input series are malformed.
    Data { reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(what: impl Into<String>) -> Self {
        Error::Domain { what: what.into() }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what } => write!(f, "domain error: {what}"),
            Error::InvalidProfile { reason } => write!(f, "invalid correlation profile: {reason}"),
            Error::CorrelationOutOfRange { index, rho } => {
                write!(f, "correlation rho_{index} = {rho} is outside (-1, 1)")
            }
            Error::RegimeMismatch { reason } => write!(f, "regime mismatch: {reason}"),
            Error::Estimation { reason } => write!(f, "estimation failed: {reason}"),
            Error::ConstraintViolation { reason } => write!(f, "constraint violation: {reason}"),
            Error::SingularInformation { direction } => {
                write!(f, "information matrix is singular along {direction}")
            }
            Error::Quadrature { achieved, requested } => write!(
                f,
                "quadrature did not converge: error estimate {achieved:e} exceeds {requested:e}"
            ),
            Error::Data { reason } => write!(f, "data error: {reason}"),
        }
    }
}

impl core::error::Error for Error {}
