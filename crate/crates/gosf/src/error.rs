use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid caller input: malformed data, bad dimensions, out-of-range parameters.
    #[error("input error: {0}")]
    Input(String),

    /// CSV parsing failure with cell coordinates.
    #[error("csv error in {path} (line {line}, column {column}): {message}")]
    Csv {
        path: String,
        line: usize,
        column: String,
        message: String,
    },

    /// A numerical routine failed to produce a usable result.
    #[error("solver error: {0}")]
    Solver(String),

    /// The multiplier bootstrap could not produce a valid distribution.
    #[error("bootstrap error: {0}")]
    Bootstrap(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI: 2 for input errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Csv { .. } => 2,
            Error::Solver(_) | Error::Bootstrap(_) => 3,
        }
    }
}
