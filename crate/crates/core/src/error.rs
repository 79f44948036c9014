use thiserror::Error;

use crate::model::SampleSet;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{op}: {detail}")]
    Numerical { op: &'static str, detail: String },

    #[error("{op}: no convergence after {iterations} iterations (last residual {residual:e})")]
    NotConverged {
        op: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("live-cell count exceeded the cap of {cap}")]
    PopulationCap { cap: usize, partial: Box<SampleSet> },

    #[error("missing observables for {what}: {missing}")]
    MissingObservables { what: String, missing: String },

    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            op,
            detail: detail.into(),
        }
    }

    /// Process exit code: 1 for validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } | Error::NotConverged { .. } | Error::PopulationCap { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
