use std::io;

use crate::bridge::ProtocolError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("connection error: {0}")]
    Connection(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of an external backend (transport or wire format),
    /// as opposed to bad arguments.
    pub fn is_backend(&self) -> bool {
        matches!(self, Error::Connection(_) | Error::Protocol(_))
    }
}
