use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("{what} is outside the admissible range ({bound})")]
    Domain { what: String, bound: String },

    #[error("endpoint {end:?} lies outside the field box {shape:?}")]
    OutOfBounds { end: Vec<usize>, shape: Vec<usize> },

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("unsupported distribution for this operation: {0}")]
    Unsupported(String),

    #[error("unknown experiment `{name}`; valid names: {}", valid.join(", "))]
    UnknownExperiment { name: String, valid: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors that stem from a numeric failure or a feasibility refusal.
    pub fn is_refusal(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::Refused(_))
    }
}
