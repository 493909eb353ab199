//! Multi-label evaluation measures.
//!
//! All inputs are `labels × instances` matrices. Ground truth and thresholded
//! predictions use `{-1, +1}` entries; scores are real-valued.
//!
//! | metric | better | needs |
//! |--------|--------|-------|
//! | [`ranking_loss`] (Rkl) | lower | scores |
//! | [`auc`] (Auc) | higher | scores |
//! | [`coverage`] (Cvg) | lower | scores |
//! | [`average_precision`] (Ap) | higher | scores |
//! | [`hamming_loss`] (Hl) | lower | thresholded |
//! | [`jaccard_score`] (Jsc) | higher | thresholded |
//!
//! Degenerate labels or instances (no positives, or no negatives where the
//! measure needs both) are excluded with a warning and counted in
//! [`MetricValue::n_excluded`].

mod measures;
mod report;

pub use measures::{
    auc, auc_macro, average_precision, coverage, hamming_loss, jaccard_score, ranking_loss, Aggregation, MetricValue,
};
pub use report::{evaluate, Metric, MetricInput, MetricRecord, MetricReport};

use thiserror::Error;

pub type Scores = nalgebra::DMatrix<f64>;
pub type Signs = nalgebra::DMatrix<i8>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },

    #[error("empty input")]
    Empty,

    #[error("{metric}: every {unit} is degenerate")]
    AllDegenerate { metric: &'static str, unit: &'static str },

    #[error("instance {0} has no positive truth label")]
    NoPositiveLabel(usize),
}

pub type Result<T> = std::result::Result<T, MetricsError>;
