use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("market is not money clearing")]
    NotMoneyClearing,

    /// A solver invariant was broken. On correct runs this is unreachable.
    #[error("internal invariant breach: {0}")]
    Internal(String),

    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) | Error::UnknownFixture(_) => 2,
            Error::InvalidInstance(_) | Error::TooLarge(_) => 2,
            Error::NotMoneyClearing => 3,
            Error::Internal(_) => 4,
        }
    }
}
