use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (shape mismatch, negative input, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("quadrature did not reach tolerance {tol:e} within {subdivisions} subdivisions (error estimate {estimate:e})")]
    Quadrature {
        tol: f64,
        subdivisions: usize,
        estimate: f64,
    },

    #[error("divergent normalizer: {0}")]
    DivergentNormalizer(String),

    #[error("unknown psi kernel `{0}` (expected psi1 or psi2)")]
    UnknownKernel(String),

    #[error("family is empty")]
    EmptyFamily,

    #[error("weights violate sum exp(-delta) <= 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },

    #[error("candidate evaluation matrix is near-singular (condition number {condition_number:e}); prune candidates")]
    Degenerate { condition_number: f64 },

    #[error("saddle-point iteration stopped after {iterations} outer steps with certificate {certificate:e}")]
    NotConverged {
        iterations: usize,
        certificate: f64,
        alpha: Vec<f64>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::DivergentNormalizer(_)
                | Error::Degenerate { .. }
                | Error::NotConverged { .. }
        )
    }
}
