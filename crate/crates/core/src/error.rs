use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument {value} outside supported range [{min}, {max}]")]
    Range { value: f64, min: f64, max: f64 },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("operation `{op}` does not support the {variant} kernel variant")]
    UnsupportedVariant { op: &'static str, variant: &'static str },

    #[error("evaluation at pole {pole}")]
    Pole { pole: Complex64 },

    #[error("kernel transform has no nonzero root; the clustering obstruction does not apply")]
    NoTarget,

    #[error("root polishing did not converge (worst residual {worst_residual:e}, tolerance {tolerance:e})")]
    RootPolish { worst_residual: f64, tolerance: f64, residuals: Vec<f64> },

    #[error("grid under-resolves mode (m={m}, n={n}): {reason}")]
    Resolution { m: u32, n: u32, reason: String },

    #[error("characteristic roots nearly coincide (min separation {separation:e}); use a time-domain solver")]
    DegenerateSpectrum { separation: f64 },

    #[error("invalid time step or horizon: {0}")]
    InvalidStep(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
