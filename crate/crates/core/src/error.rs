use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or scenario parameter is outside its admissible range.
    #[error("invalid parameter {name} = {value}: must satisfy {bound}")]
    InvalidParameter { name: &'static str, value: f64, bound: &'static str },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, bound: &'static str) -> Self {
        Error::InvalidParameter { name, value, bound }
    }

    /// Whether the error is the caller's fault (bad input) rather than an
    /// internal numeric failure.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Numerics(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
