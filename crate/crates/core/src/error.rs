use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("trajectory diverged at t = {time}: component {component} = {value}")]
    Divergence {
        time: f64,
        component: usize,
        value: f64,
    },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("fixed-point search did not converge (best residual {best_residual:e})")]
    NonConvergence { best_residual: f64 },

    #[error("no equilibrium found on the rate square")]
    EmptySolutionSet,

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("no root in bracket for {0}")]
    NoRoot(&'static str),

    #[error("regime boundary crossed: {0}")]
    RegimeBoundary(String),

    #[error("complex radicand in {0}")]
    ComplexRadicand(&'static str),

    #[error("wrong case: expected {expected}, found {found}")]
    WrongCase { expected: String, found: String },

    #[error("partisan cap binding: required non-partisan rate {required} exceeds cap {cap}")]
    PartisanCapBinding { required: f64, cap: f64 },

    #[error("oracle disagreement: {0}")]
    OracleDisagreement(String),

    #[error("config: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what))
    }
}
