use thiserror::Error;

/// Errors raised by the simulator and its building blocks.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("satellite ({plane}, {slot}) is not part of the constellation")]
    UnknownSatellite { plane: usize, slot: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("power iteration did not converge after {0} steps")]
    NoConvergence(usize),
    #[error("non-finite model parameters at round {round}")]
    NumericBlowUp { round: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
