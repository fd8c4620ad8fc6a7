use thiserror::Error;

/// Errors raised by the physics core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("quadrature grid of {steps} steps exceeds the budget of {budget}")]
    GridTooLarge { steps: usize, budget: usize },

    #[error("time grids disagree: {0}")]
    GridMismatch(String),

    #[error("noise grid must be uniform: {0}")]
    BadGrid(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical integration itself, as opposed to bad input.
    pub fn is_integration_failure(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::StepFailure { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
