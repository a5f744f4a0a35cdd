use thiserror::Error;

use crate::state::State;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pendulum parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration blew up near state {state:?}")]
    IntegrationBlowup { state: State },

    #[error("linearization produced a non-finite entry at {0}")]
    NonFiniteLinearization(String),

    #[error("calibration failed to reach 5% on the primary entries (relative errors {relative_errors:?})")]
    CalibrationFailed { relative_errors: Vec<(String, f64)> },

    #[error("Riccati solver did not converge (residual {residual:e})")]
    RiccatiNonConvergence { residual: f64 },

    #[error("Riccati solution is not stabilizing")]
    NotStabilizing,

    #[error("polynomial root finder did not converge")]
    RootFinder,

    #[error("degenerate angle encoding (pair norm {norm:e})")]
    DegenerateEncoding { norm: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
