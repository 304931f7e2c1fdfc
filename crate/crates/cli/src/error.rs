use thiserror::Error;

/// Failure classes, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed scenario or design input.
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<irsdet::Error> for CliError {
    fn from(e: irsdet::Error) -> Self {
        match e {
            irsdet::Error::Solver(_) => CliError::Solver(e.to_string()),
            irsdet::Error::Format(_) => CliError::Parse(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
