use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
/// Bad arguments, configuration, or missing/invalid input files.
pub const EXIT_INPUT: i32 = 2;
/// Every image failed segmentation or extraction.
pub const EXIT_ALL_FAILED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("all {0} images failed; see failures.log")]
    AllFailed(usize),
    #[error(transparent)]
    Core(#[from] prism_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Other(Box<dyn std::error::Error + Send + Sync>),
}

impl CliError {
    pub fn io(context: impl std::fmt::Display, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use prism_core::Error as E;
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::AllFailed(_) => EXIT_ALL_FAILED,
            CliError::Core(E::Input(_) | E::Schema { .. } | E::Format(_)) => EXIT_INPUT,
            CliError::Core(_) | CliError::Io { .. } | CliError::Other(_) => EXIT_FAILURE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
