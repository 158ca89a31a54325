use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Data,
    Model,
}

/// What went wrong while parsing one line of a feature or score file.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("missing header line")]
    MissingHeader,
    #[error("duplicate header")]
    DuplicateHeader,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("unknown modality `{0}`")]
    UnknownModality(String),
    #[error("declared modality `{found}` but `{expected}` was expected")]
    ModalityMismatch { expected: String, found: String },
    #[error("dimension mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-numeric cell `{0}`")]
    NonNumeric(String),
    #[error("non-finite value `{0}`")]
    NonFinite(String),
    #[error("probabilities must sum to 1 (got {0})")]
    NotNormalized(f64),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate landmark geometry: all pairwise distances are zero")]
    DegenerateGeometry,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("no usable predictor: every contributing slot has zero weight")]
    NoUsablePredictor,

    #[error("image `{0}` has no faces and no full-image score")]
    Unclassifiable(String),

    #[error("{}:{line}: {kind}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        kind: ParseErrorKind,
    },

    #[error("manifest {}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("model: {0}")]
    Model(String),

    #[error("missing model bundle at {}", .0.display())]
    MissingModel(PathBuf),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Model(_) | Error::MissingModel(_) | Error::NoUsablePredictor => Category::Model,
            _ => Category::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
