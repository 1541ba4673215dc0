use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse law `{input}`: {reason}")]
    LawSyntax { input: String, reason: String },

    #[error("level {x} outside the table grid [{lo}, {hi}] (table err_bound {err_bound:e})")]
    OutOfGrid {
        x: f64,
        lo: f64,
        hi: f64,
        err_bound: f64,
    },

    #[error("grid too short: {0}")]
    GridTooShort(String),

    #[error("discretization error estimate {err_bound:e} exceeds 10 x tol = {tol:e}; refine the step")]
    ToleranceNotMet { err_bound: f64, tol: f64 },

    #[error("q-scale series diverged: {0}")]
    Divergence(String),

    #[error("conditioning on a near-null event (probability {probability:e})")]
    NearNullEvent { probability: f64 },

    #[error("conditioning event never occurred in {attempted} replications ({hits} hits)")]
    ZeroSupport { attempted: u64, hits: u64 },

    #[error("line {line}: {message}")]
    SpecSyntax { line: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
