use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CraftError>;

#[derive(Debug, Error)]
pub enum CraftError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("csv {path}, line {line}: {msg}")]
    Csv {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("zero-variance feature in column {0}")]
    ZeroVariance(usize),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("non-finite log-likelihood at EM iteration {iteration}")]
    NonFiniteLikelihood { iteration: usize },

    #[error("non-finite gradient in parameter block {0}")]
    NonFiniteGradient(String),

    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),

    #[error("degenerate spread: {0}")]
    DegenerateSpread(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CraftError {
    /// Stable snake_case tag for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            CraftError::InvalidArgument(_) => "invalid_argument",
            CraftError::Shape(_) => "shape",
            CraftError::Csv { .. } => "csv",
            CraftError::ZeroVariance(_) => "zero_variance",
            CraftError::Degenerate(_) => "degenerate",
            CraftError::NonFiniteLikelihood { .. } => "non_finite_likelihood",
            CraftError::NonFiniteGradient(_) => "non_finite_gradient",
            CraftError::NonFiniteLoss(_) => "non_finite_loss",
            CraftError::DegenerateSpread(_) => "degenerate_spread",
            CraftError::Checkpoint(_) => "checkpoint",
            CraftError::Io { .. } => "io",
            CraftError::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CraftError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CraftError::InvalidArgument(msg.into())
    }
}
