use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("{quantity} = {value} is outside the domain: {reason}")]
    Domain {
        quantity: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("step size {dt} exceeds the maximum {max} needed to resolve the 2ω term")]
    StepSize { dt: f64, max: f64 },
    #[error("expected a state in the {expected} frame")]
    Frame { expected: &'static str },
    #[error("no root found below t_max = {t_max}")]
    SearchFailure { t_max: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature did not converge: node doubling changed the result by {change:e}")]
    Accuracy { change: f64 },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("window of {window} is not an integer number of periods π/ω = {period}")]
    Window { window: f64, period: f64 },
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            quantity,
            value,
            reason,
        }
    }

    /// True for failures of numerical accuracy rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Accuracy { .. } | Error::Fit(_) | Error::SearchFailure { .. }
        )
    }
}
