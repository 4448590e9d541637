use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` = {value} is out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("domain mismatch: expected a density on [{expected_lo}, {expected_hi}], got [{lo}, {hi}]")]
    DomainMismatch {
        expected_lo: f64,
        expected_hi: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("density is not normalized (mass = {mass})")]
    NotNormalized { mass: f64 },

    #[error("trajectory diverged at t = {t}{}", trajectory.map(|i| format!(" (trajectory {i})")).unwrap_or_default())]
    Divergence { t: f64, trajectory: Option<usize> },

    #[error("quadrature did not converge: achieved error estimate {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("degenerate Gaussian measure: {0}")]
    DegenerateMeasure(String),

    #[error("covariance kernel is not positive semi-definite")]
    KernelNotPsd,

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid history: {0}")]
    InvalidHistory(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected,
        })
    }
}
