use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One problem found while validating a model specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub layer: Option<usize>,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, layer: Option<usize>, message: impl Into<String>) -> Self {
        Self { field: field.into(), layer, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layer {
            Some(i) => write!(f, "{} (layer {}): {}", self.field, i, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

/// Failure modes of the `EEGT` container and the other binary blobs.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload: {0}")]
    Truncated(String),
    #[error("label {label} out of range at trial {trial}")]
    LabelOutOfRange { trial: usize, label: u8 },
    #[error("malformed content: {0}")]
    Malformed(String),
}

impl FormatError {
    /// Stable numeric code, distinct per failure kind.
    pub fn code(&self) -> u8 {
        match self {
            FormatError::BadMagic { .. } => 1,
            FormatError::UnsupportedVersion(_) => 2,
            FormatError::Truncated(_) => 3,
            FormatError::LabelOutOfRange { .. } => 4,
            FormatError::Malformed(_) => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("spec parse error at line {line}: {message}")]
    SpecParse { line: usize, message: String },
    #[error("invalid model specification: {}", join_violations(.0))]
    Spec(Vec<Violation>),
    #[error("build error at layer {layer}: {message}")]
    Build { layer: usize, message: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
