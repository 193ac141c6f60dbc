use std::fmt;

/// A failed command. The variant decides the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, unreadable or malformed files, invalid specs. Exit code 2.
    Input(String),
    /// Solver or inference failure on valid input. Exit code 3.
    Numerical(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<might::Error> for CliError {
    fn from(e: might::Error) -> Self {
        classify(&e, e.to_string())
    }
}

/// Wraps a library error with a user-facing message, keeping its exit class.
pub fn classify(e: &might::Error, message: String) -> CliError {
    if e.is_input_error() {
        CliError::Input(message)
    } else {
        CliError::Numerical(message)
    }
}
