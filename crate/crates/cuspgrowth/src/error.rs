use thiserror::Error;

/// Errors raised by the library. Report-style operations never return these
/// for failed checks; they only signal invalid input or numerical breakdown.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("t = {t} lies below the profile domain start {start}")]
    Domain { t: f64, start: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bridge construction failed on [{q}, {r}]: worst violation {worst:.3e} ({what})")]
    Construction {
        q: f64,
        r: f64,
        worst: f64,
        what: String,
    },

    #[error("quadrature did not converge within {panels} panels (partial log-estimate {partial})")]
    Quadrature { panels: usize, partial: f64 },

    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("bisection bracket failure: {0}")]
    Bracket(String),

    #[error("unknown example id `{0}`")]
    UnknownExample(String),

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("radius {r} exceeds the enumeration cap {cap}")]
    AboveCap { r: f64, cap: f64 },

    #[error("no sample at grid point {0}")]
    MissingGridPoint(f64),

    #[error("input is not nondecreasing near index {0}")]
    NonMonotone(usize),

    #[error("specification error: {0}")]
    Specification(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
