use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("group `{group}` is degenerate: {reason}")]
    DegenerateGroup { group: String, reason: String },

    #[error("at least {needed} groups are required, got {got}")]
    InsufficientGroups { needed: usize, got: usize },

    #[error("{metric} is undefined: {reason}")]
    UndefinedMetric {
        metric: &'static str,
        reason: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("within-group variance is zero, the F statistic is undefined")]
    DegenerateVariance,

    #[error("group {group} has {got} samples, at least 2 are required")]
    InsufficientData { group: usize, got: usize },

    #[error("degenerate affine fit: {0}")]
    DegenerateFit(String),

    #[error("asset library has no asset in category `{0}`")]
    MissingAsset(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Errors caused by the caller's data or arguments rather than by the
    /// computation itself. The CLI maps these to a separate exit code.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::InvalidParameter { .. }
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::Format(_)
                | Error::Json(_)
                | Error::MissingAsset(_)
                | Error::Shape(_)
        )
    }
}
