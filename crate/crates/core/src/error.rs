use thiserror::Error;

/// Errors raised by model construction, inference and the experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate potential: {0}")]
    Degenerate(String),

    #[error("graph structure error: {0}")]
    Structure(String),

    #[error("grid mismatch: expected {expected} values, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("insufficient spectrum: no eigenvalue <= {delta} among {len} terms")]
    InsufficientSpectrum { delta: f64, len: usize },

    #[error("refusing {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Degenerate(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
