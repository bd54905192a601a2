use crate::manifest::ManifestError;
use crate::smx::SmxError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
    #[error(transparent)]
    Smx(#[from] SmxError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Core(#[from] sparsefer_core::Error),
    #[error("missing artifact {0}; run the earlier stages first")]
    Missing(String),
    #[error("incomplete bundle: {0}")]
    Incomplete(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

fn core_exit_code(e: &sparsefer_core::Error) -> i32 {
    match e {
        _ if e.is_numerical() => EXIT_NUMERICAL,
        sparsefer_core::Error::NoQualifiedCandidate => EXIT_NUMERICAL,
        sparsefer_core::Error::InvalidArgument(_) => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

impl Error {
    /// Process exit code: 2 config, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => EXIT_CONFIG,
            Error::Core(e) | Error::Smx(SmxError::Matrix(e)) | Error::Manifest(ManifestError::Dataset(e)) => {
                core_exit_code(e)
            }
            Error::Stage { source, .. } => source.exit_code(),
            _ => EXIT_DATA,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn format(path: &std::path::Path, reason: impl std::fmt::Display) -> Self {
        Error::Format {
            path: path.display().to_string(),
            reason: reason.to_string(),
        }
    }
}
