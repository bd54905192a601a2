use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("class {class} has {available} samples, {required} required")]
    ClassTooSmall {
        class: String,
        available: usize,
        required: usize,
    },

    #[error("identity-disjoint split infeasible: {0}")]
    IdentityInfeasible(String),

    #[error("atom {atom} has norm {norm}, expected unit norm")]
    NotNormalized { atom: usize, norm: f64 },

    #[error("column {column} is all zeros")]
    ZeroColumn { column: usize },

    #[error("column {column}: {source}")]
    AtColumn {
        column: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("no projection candidate passed the quality check at any dimension")]
    NoQualifiedCandidate,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. } | Error::Numerical(_) => true,
            Error::AtColumn { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
