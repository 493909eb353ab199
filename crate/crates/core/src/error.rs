use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("empty label set")]
    EmptyLabelSet,

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("invalid label bit string {0:?}: expected 5 characters of 0/1")]
    BadLabelBits(String),

    #[error("profile {profile}: missing meta file {path}")]
    MissingMeta { profile: String, path: PathBuf },

    #[error("profile {profile}: {message}")]
    InvalidProfile { profile: String, message: String },

    #[error("dataset has no profiles")]
    NoProfiles,

    #[error("dataset validation failed: {0}")]
    Validation(String),

    #[error("label matrix must have 5 rows and only -1/+1 entries with at least one +1 per column")]
    BadLabelMatrix,

    #[error("feature vector for {space} contains a non-finite entry at {index}")]
    NonFinite { space: String, index: usize },

    #[error("{space} feature has dimension {actual}, expected {expected}")]
    DimensionMismatch { space: String, expected: usize, actual: usize },

    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CoreError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io { path: path.into(), source }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        CoreError::Json { path: path.into(), source }
    }
}
