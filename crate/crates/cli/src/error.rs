use std::process::ExitCode;

/// Failures surfaced by the command-line front end, each with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("self-test failed")]
    SelftestFailed,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn parse(path: impl AsRef<std::path::Path>, message: impl ToString) -> Self {
        CliError::Parse { path: path.as_ref().display().to_string(), message: message.to_string() }
    }

    /// 1 self-test failure, 2 usage error, 3 I/O error.
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::SelftestFailed => 1,
            CliError::Usage(_) | CliError::Parse { .. } => 2,
            CliError::Io { .. } => 3,
        })
    }
}

impl From<bcl_core::Error> for CliError {
    fn from(e: bcl_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
