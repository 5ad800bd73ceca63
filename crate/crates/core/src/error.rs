use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Network-level failure talking to a remote sampler. Safe to retry.
    #[error("transport error: {0}")]
    Transport(String),

    /// The remote side answered, but not in the agreed wire format.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("dataset has no input/output split")]
    MissingSplit,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Transport(_))
    }
}
