use radialis_core::SolveError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("refused: {0}")]
    Refusal(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io { .. } => 3,
            CliError::Refusal(_) => 4,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::FallToCenter { .. } | SolveError::StronglySingular(_) => {
                CliError::Refusal(e.to_string())
            }
            e if e.is_invalid_request() => CliError::Config(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}
