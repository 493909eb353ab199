//! Per-profile feature extraction: SURF keypoints and descriptors, k-means
//! visual vocabularies and bag-of-visual-words histograms, recognizer tag
//! histograms, and skip-gram caption embeddings.

pub mod bovw;
pub mod error;
pub mod kmeans;
pub mod surf;
pub mod tags;
pub mod text;

pub use error::{FeatureError, Result};
