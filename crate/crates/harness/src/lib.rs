//! Leave-one-subject-out experiments over the four feature spaces and
//! their fusion, synthetic datasets with planted structure, reports, and
//! the `needscope` command line.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod featfile;
pub mod fusion;
pub mod loso;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use config::ExperimentConfig;
pub use corpus::Corpus;
pub use error::{HarnessError, Result};
pub use fusion::fuse;
pub use loso::run_loso;
pub use report::{emit_report, EvaluationReport, SpaceReport};
pub use synth::{generate, SynthData, SynthSpec};
