use thiserror::Error;

use crate::flow::PhasePoint;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({x}, {y}) is outside the validity region of the {chart} chart")]
    OutsideChart { chart: &'static str, x: f64, y: f64 },

    #[error("conformal factor of the {chart} chart is not positive ({value}) at ({x}, {y})")]
    NonPositiveFactor {
        chart: &'static str,
        value: f64,
        x: f64,
        y: f64,
    },

    #[error("trajectory left the {chart} chart: last valid state at t = {last_time}, exit near t = {exit_time}")]
    LeftChart {
        chart: &'static str,
        last: PhasePoint,
        last_time: f64,
        exit_time: f64,
    },

    #[error("step size underflow at t = {time} (h = {step}); the problem looks stiff")]
    StepUnderflow {
        time: f64,
        step: f64,
        state: PhasePoint,
    },

    #[error("{operation}: {detail}")]
    Contract {
        operation: &'static str,
        detail: String,
    },

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("expression error: {0}")]
    Expression(String),
}

impl Error {
    pub(crate) fn contract(operation: &'static str, detail: impl Into<String>) -> Self {
        Error::Contract {
            operation,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutsideChart { .. } => "outside_chart",
            Error::NonPositiveFactor { .. } => "non_positive_factor",
            Error::LeftChart { .. } => "left_chart",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::Contract { .. } => "contract",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Expression(_) => "expression",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
