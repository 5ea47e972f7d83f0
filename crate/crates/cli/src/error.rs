use poisson_reduce_core::Error as CoreError;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config {path}: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Schema { path: PathBuf, msg: String },
    #[error("{context}: {source}")]
    Runtime {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("verification failed: {}", .0.join(", "))]
    Verify(Vec<String>),
}

impl CliError {
    pub fn config(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Self::Config { path: path.into(), msg: msg.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn schema(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Self::Schema { path: path.into(), msg: msg.to_string() }
    }

    pub fn runtime(context: impl ToString, source: CoreError) -> Self {
        Self::Runtime { context: context.to_string(), source }
    }

    /// 1 config, IO or schema; 2 runtime; 3 turning region; 4 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::Io { .. } | Self::Schema { .. } => 1,
            Self::Runtime { source: CoreError::TurningRegion { .. }, .. } => 3,
            Self::Runtime { .. } => 2,
            Self::Verify(_) => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
