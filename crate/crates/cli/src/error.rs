use qcert_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const FAIL: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const SOLVER: u8 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed files, flags or data.
    #[error("{0}")]
    Input(String),
    /// The SDP solver did not certify an optimum.
    #[error("{0}")]
    Solver(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self::Input(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => exit::INPUT,
            Self::Solver(_) => exit::SOLVER,
            Self::Core(CoreError::Convergence(_)) => exit::SOLVER,
            Self::Core(_) => exit::INPUT,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
