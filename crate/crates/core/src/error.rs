use thiserror::Error;

use crate::inverse::LossReport;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("solver diverged at step {step}: non-finite state")]
    Divergence { step: usize },
    #[error("optimizer error: {0}")]
    Optimizer(String),
    #[error("training failed at iteration {iteration}: {reason}")]
    Training {
        iteration: usize,
        reason: String,
        /// The last report whose losses were all finite, if any was produced.
        last_report: Option<Box<LossReport>>,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// True when the error originates from a non-finite numerical state
    /// (solver divergence or a training run that blew up because of one).
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. } | Error::Numeric(_) | Error::Optimizer(_) | Error::Training { .. }
        )
    }
}
