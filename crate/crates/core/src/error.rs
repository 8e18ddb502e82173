use std::path::PathBuf;

use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or inconsistent input data.
    Data,
    /// A numerical routine could not produce a trustworthy result.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric: {0}")]
    Asymmetric(String),

    #[error("{what} = {value} out of range {range}")]
    Range {
        what: &'static str,
        value: usize,
        range: String,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("ill-conditioned covariance: {0}")]
    Conditioning(String),

    #[error("optimizer diverged at step {step}: loss = {loss}")]
    Divergence { step: usize, loss: f64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("{}: file not found", .0.display())]
    MissingFile(PathBuf),

    #[error("{}: {message}", path.display())]
    File { path: PathBuf, message: String },

    #[error("{}: shape mismatch for model `{model}`: {message}", path.display())]
    Shape {
        path: PathBuf,
        model: String,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("{}: non-finite value at {location}", path.display())]
    NonFinite { path: PathBuf, location: String },

    #[error("no reference model in dataset")]
    NoReference,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Conditioning(_) | Error::Divergence { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }

    /// Stable identifier for each kind of failure.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Asymmetric(_) => "asymmetric",
            Error::Range { .. } => "range",
            Error::Validation(_) => "validation",
            Error::Conditioning(_) => "conditioning",
            Error::Divergence { .. } => "divergence",
            Error::UnknownPreset(_) => "unknown_preset",
            Error::Alignment(_) => "alignment",
            Error::MissingFile(_) => "missing_file",
            Error::File { .. } => "file_format",
            Error::Shape { .. } => "shape_mismatch",
            Error::DuplicateId(_) => "duplicate_id",
            Error::NonFinite { .. } => "non_finite",
            Error::NoReference => "no_reference",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::File {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
