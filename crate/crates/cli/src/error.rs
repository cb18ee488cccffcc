//! CLI error type with scriptable exit codes.

use std::fmt;

use tba_core::solver::SolveReport;

#[derive(Debug)]
pub enum CliError {
    /// Configuration could not be parsed or validated (exit 2).
    Config { message: String },
    /// The solver hit its iteration cap (exit 3).
    Solve {
        message: String,
        report: Box<SolveReport>,
    },
    /// One or more verification checks failed (exit 4).
    Verification { failed: Vec<String> },
    /// Filesystem problem (exit 1).
    Io(std::io::Error),
    /// Unexpected internal error (exit 1).
    Core(tba_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Solve { .. } => 3,
            CliError::Verification { .. } => 4,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }

    pub fn config(field: &str, message: impl fmt::Display) -> CliError {
        CliError::Config {
            message: format!("{field}: {message}"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { message } => write!(f, "config error: {message}"),
            CliError::Solve { message, .. } => write!(f, "solve failed: {message}"),
            CliError::Verification { failed } => {
                write!(f, "verification failed: {}", failed.join(", "))
            }
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<tba_core::Error> for CliError {
    fn from(e: tba_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
