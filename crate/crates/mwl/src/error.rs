use std::path::PathBuf;

/// Errors of the IO layer and the command line pipeline.
#[derive(Debug, thiserror::Error)]
pub enum MwlError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: expected {expected} rows, found {got}")]
    RowCount { path: PathBuf, expected: usize, got: usize },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("missing input {path}: {hint}")]
    MissingInput { path: PathBuf, hint: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Core(#[from] mwl_core::Error),
}

impl MwlError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MwlError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        MwlError::Parse { path: path.into(), line, message: message.into() }
    }

    /// Process exit code: 1 for invalid input or configuration (including
    /// malformed JSON and CSV), 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            MwlError::Validation(_)
            | MwlError::MissingInput { .. }
            | MwlError::Parse { .. }
            | MwlError::RowCount { .. }
            | MwlError::Json { .. }
            | MwlError::Csv { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = MwlError> = std::result::Result<T, E>;
