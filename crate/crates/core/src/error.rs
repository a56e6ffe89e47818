use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside the supported domain: {0}")]
    Domain(String),

    #[error("quadrature failed to reach tolerance {tolerance:e} within depth {depth} (estimate {estimate}, error {error:e})")]
    QuadratureFailure {
        tolerance: f64,
        depth: usize,
        estimate: f64,
        error: f64,
    },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("grid spacing {h} is too coarse for this domain (inner radius {inner_radius})")]
    TooCoarse { h: f64, inner_radius: f64 },

    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("operation not applicable: {0}")]
    Inapplicable(String),

    #[error("exponent p = {0} outside the supported solver range [1.1, 10]")]
    UnsupportedExponent(f64),

    #[error(
        "solver stopped after {iterations} iterations without converging (lambda = {lambda}, residual = {residual:e})"
    )]
    IterationLimit {
        iterations: usize,
        lambda: f64,
        residual: f64,
    },

    #[error("grid file: {0}")]
    GridFormat(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

pub(crate) fn check_exponent(name: &'static str, p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 1, got {p}"),
        })
    }
}
