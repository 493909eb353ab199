//! Shared data model for the need-recognition toolkit.
//!
//! A [`Dataset`] is a list of subject profiles (images, captions, demographic
//! metadata and a non-empty set of Glasser needs) plus the derived
//! `{-1, +1}` label matrix consumed by the multi-label learner. Datasets are
//! materialized on disk with a fixed directory layout, see [`io`].

pub mod dataset;
pub mod error;
pub mod feature;
pub mod imageio;
pub mod io;
pub mod labels;
pub mod profile;

pub use dataset::{labels_to_matrix, matrix_to_labels, validate_dataset, Dataset, LabelMatrix, ValidationReport, Violation};
pub use error::{CoreError, Result};
pub use feature::{FeatureSpace, FeatureVector};
pub use imageio::{load_gray, GrayImage};
pub use io::{load_dataset, save_dataset, LoadReport};
pub use labels::{GlasserLabelSet, Need};
pub use profile::{Caption, Gender, ProfileRecord, Region};
