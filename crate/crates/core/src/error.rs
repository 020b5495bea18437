use thiserror::Error;

use crate::variational::FlowRecord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("outside the Garding cone: {0}")]
    Cone(String),

    #[error("numerical failure: {msg}")]
    Numerical { msg: String, residual: Option<f64> },

    #[error("matrix is not in the dual cone: {0}")]
    DualCone(String),

    #[error("could not bracket the eigenvalue: {0}")]
    Bracket(String),

    #[error("no blow-up found below the lambda ceiling {ceiling}")]
    Ceiling { ceiling: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("time step fell below {dt_min:e} at t = {t}")]
    Stiff { t: f64, dt_min: f64, trajectory: Vec<FlowRecord> },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical { msg: msg.into(), residual: None }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Param(_) => "parameter",
            Error::Cone(_) => "cone",
            Error::Numerical { .. } => "numerical",
            Error::DualCone(_) => "dual_cone",
            Error::Bracket(_) => "bracket",
            Error::Ceiling { .. } => "ceiling",
            Error::Degenerate(_) => "degenerate",
            Error::Stiff { .. } => "stiffness",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}
