use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or incomplete configuration.
    Config(String),
    Core(svj_core::Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Core(e) if e.is_validation() => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "numerical error: {e}"),
            CliError::Io { path, source } => write!(f, "I/O error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<svj_core::Error> for CliError {
    fn from(e: svj_core::Error) -> Self {
        CliError::Core(e)
    }
}
