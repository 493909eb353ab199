use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FeatureError>;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("empty image")]
    EmptyImage,

    #[error("filter size {size} is invalid: expected 9 + 6k")]
    BadFilterSize { size: usize },

    #[error("filter size {size} exceeds the {width}x{height} image")]
    FilterTooLarge { size: usize, width: usize, height: usize },

    #[error("keep fraction {0} outside (0, 1]")]
    BadKeepFraction(f64),

    #[error("descriptor window at ({x:.1}, {y:.1}) scale {scale:.2} leaves the image")]
    WindowOutOfBounds { x: f64, y: f64, scale: f64 },

    #[error("descriptor window has no gradient energy")]
    FlatWindow,

    #[error("k-means needs at least k = {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },

    #[error("k-means needs at least k = {k} distinct points, got {distinct}")]
    TooFewDistinct { distinct: usize, k: usize },

    #[error("sampled images hold {available} descriptors, fewer than k = {k}; use a larger image fraction")]
    VocabularyPoolTooSmall { available: usize, k: usize },

    #[error("descriptor store is empty")]
    NoDescriptors,

    #[error("expected dimension {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("tag score {score} for {tag:?} outside [0, 1]")]
    BadScore { tag: String, score: f64 },

    #[error("empty tag for image {0:?}")]
    EmptyTag(String),

    #[error("vocabulary empty after min_count filtering")]
    EmptyVocabulary,

    #[error("region {0:?} has no caption text")]
    RegionWithoutText(String),

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Core(#[from] needscope_core::CoreError),
}

impl FeatureError {
    pub(crate) fn format(what: &'static str, message: impl Into<String>) -> Self {
        FeatureError::Format { what, message: message.into() }
    }
}
