use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GlocalError>;

#[derive(Debug, Error)]
pub enum GlocalError {
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),

    #[error("{what}: expected {expected}, got {actual}")]
    Shape { what: &'static str, expected: String, actual: String },

    #[error("block {block} has no Z matrix for group {group} of {groups}")]
    UnknownBlock { block: String, group: usize, groups: usize },

    #[error("non-finite values in block {block} at sweep {sweep}")]
    NonFinite { sweep: usize, block: String },

    #[error("label matrix has rank 0")]
    ZeroRank,

    #[error(transparent)]
    Clustering(#[from] needscope_features::FeatureError),

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
}

pub(crate) fn shape(what: &'static str, expected: (usize, usize), actual: (usize, usize)) -> GlocalError {
    GlocalError::Shape {
        what,
        expected: format!("{}x{}", expected.0, expected.1),
        actual: format!("{}x{}", actual.0, actual.1),
    }
}
