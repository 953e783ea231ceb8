use thiserror::Error;

/// Failures of a command, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hartree_core::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("potential: {0}")]
    Potential(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// The minimizing sequence ran off to `-∞` or collapsed.
    #[error("{0}")]
    Diverged(String),

    #[error("{0}")]
    NotConverged(String),

    /// One or more verification checks failed.
    #[error("{0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hartree_core::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::NotConverged { .. } => 3,
                E::NonFiniteField(_) | E::Internal(_) | E::OutsideBounds { .. } => 5,
                _ => 2,
            },
            CliError::Config(_) | CliError::Potential(_) | CliError::Io(_) => 2,
            CliError::Csv(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Diverged(_) => 4,
            CliError::ChecksFailed(_) => 5,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
