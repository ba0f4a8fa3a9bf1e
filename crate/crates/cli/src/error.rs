use std::path::PathBuf;

/// Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] delaystab::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(delaystab::Error::Numerical(_)) => 3,
            _ => 2,
        }
    }
}
