//! Low-rank multi-label learning with learned global and local label
//! correlations.
//!
//! Labels `Y` (labels × instances, entries ±1) are factored as `U V`, latent
//! labels are regressed from features by `V ≈ Wᵀ X`, and predictions
//! `F = U Wᵀ X` are smoothed by per-group correlation factors `Z_m` with
//! unit-norm rows. Training alternates gradient steps over `V`, `U`, `W`
//! and each `Z_m`.

mod error;
mod model;
mod objective;
mod train;

pub use error::{GlocalError, Result};
pub use model::{init_model, partition_groups, predict, GlocalModel, GlocalParams, Predictions, TrainingData};
pub use objective::{gradient, objective, Block, ObjectiveTerms};
pub use train::{train, train_from};
