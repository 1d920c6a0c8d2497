use std::path::PathBuf;

/// Errors of the file formats, the harness and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] cdmalab_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("CSV output {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("{failed} of {total} grid points failed")]
    Partial { failed: usize, total: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for invalid input, 3 for partial failure, 1
    /// otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Partial { .. } => 3,
            Error::Config(_) | Error::Parse { .. } | Error::Json { .. } => 2,
            Error::Core(e) => match e {
                cdmalab_core::Error::InvalidConfig(_)
                | cdmalab_core::Error::Domain(_)
                | cdmalab_core::Error::Capacity { .. } => 2,
                cdmalab_core::Error::SamplingFailed { .. } => 1,
            },
            Error::Io { .. } | Error::Csv { .. } => 1,
        }
    }
}
