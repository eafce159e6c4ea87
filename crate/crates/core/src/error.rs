use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Config(_) | Error::Grid(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
