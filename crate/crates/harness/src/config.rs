//! Experiment configuration, read from a flat TOML file.

use std::path::{Path, PathBuf};

use needscope_core::FeatureSpace;
use needscope_features::bovw::VocabularyParams;
use needscope_features::surf::SurfParams;
use needscope_features::text::SkipGramParams;
use needscope_glocal::GlocalParams;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Every key is optional; missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spaces: Vec<FeatureSpace>,
    /// Adds the fused space (all of `fusion_blocks`) to the evaluation.
    pub fusion: bool,
    pub fusion_blocks: Vec<FeatureSpace>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub jobs: usize,
    /// Fit vocabularies, dictionaries and embeddings once on all profiles
    /// instead of per fold. Leaks test-profile content into the features.
    pub fast_leaky: bool,

    pub surf_octaves: usize,
    pub surf_threshold: f64,
    pub surf_keep_fraction: f64,
    pub surf_upright: bool,

    pub vocab_k: usize,
    pub vocab_image_fraction: f64,
    pub vocab_max_iter: usize,

    pub tag_min_score: Option<f64>,

    pub text_dim: usize,
    pub text_window: usize,
    pub text_negatives: usize,
    pub text_epochs: usize,
    pub text_min_count: usize,
    pub text_learning_rate: f64,

    pub glocal_k: usize,
    pub glocal_g: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub glocal_max_sweeps: usize,
    pub glocal_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let surf = SurfParams::default();
        let vocab = VocabularyParams::default();
        let text = SkipGramParams::default();
        let glocal = GlocalParams::default();
        ExperimentConfig {
            spaces: FeatureSpace::FUSION_ORDER.to_vec(),
            fusion: false,
            fusion_blocks: FeatureSpace::FUSION_ORDER.to_vec(),
            seed: 0,
            output_dir: PathBuf::from("report"),
            jobs: 1,
            fast_leaky: false,
            surf_octaves: surf.octaves,
            surf_threshold: surf.threshold,
            surf_keep_fraction: surf.keep_fraction,
            surf_upright: surf.upright,
            vocab_k: vocab.k,
            vocab_image_fraction: vocab.image_fraction,
            vocab_max_iter: vocab.max_iter,
            tag_min_score: None,
            text_dim: text.dim,
            text_window: text.window,
            text_negatives: text.negatives,
            text_epochs: text.epochs,
            text_min_count: text.min_count,
            text_learning_rate: text.learning_rate,
            glocal_k: glocal.k,
            glocal_g: glocal.g,
            lambda1: glocal.lambda1,
            lambda2: glocal.lambda2,
            lambda3: glocal.lambda3,
            lambda4: glocal.lambda4,
            glocal_max_sweeps: glocal.max_sweeps,
            glocal_tol: glocal.tol,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|source| HarnessError::Toml { path: origin.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.spaces.is_empty() && !self.fusion {
            return bad("no feature spaces selected".into());
        }
        if self.spaces.contains(&FeatureSpace::Fusion) {
            return bad("select fusion with `fusion = true`, not in `spaces`".into());
        }
        if self.fusion && (self.fusion_blocks.is_empty() || self.fusion_blocks.contains(&FeatureSpace::Fusion)) {
            return bad("fusion_blocks must list base spaces".into());
        }
        if !(self.surf_keep_fraction > 0.0 && self.surf_keep_fraction <= 1.0) {
            return bad(format!("surf_keep_fraction {} outside (0, 1]", self.surf_keep_fraction));
        }
        if !(self.vocab_image_fraction > 0.0 && self.vocab_image_fraction <= 1.0) {
            return bad(format!("vocab_image_fraction {} outside (0, 1]", self.vocab_image_fraction));
        }
        if self.vocab_k == 0 || self.text_dim == 0 || self.glocal_k == 0 || self.glocal_g == 0 {
            return bad("vocab_k, text_dim, glocal_k and glocal_g must be positive".into());
        }
        if [self.lambda1, self.lambda2, self.lambda3, self.lambda4].iter().any(|l| !(*l >= 0.0)) {
            return bad("trade-off weights must be non-negative".into());
        }
        if let Some(m) = self.tag_min_score {
            if !(0.0..=1.0).contains(&m) {
                return bad(format!("tag_min_score {m} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Base spaces whose features must be built: the evaluated ones plus
    /// fusion blocks, in fusion order.
    pub fn required_spaces(&self) -> Vec<FeatureSpace> {
        FeatureSpace::FUSION_ORDER
            .into_iter()
            .filter(|s| self.spaces.contains(s) || (self.fusion && self.fusion_blocks.contains(s)))
            .collect()
    }

    /// Evaluated spaces in report order, fusion last.
    pub fn evaluated_spaces(&self) -> Vec<FeatureSpace> {
        let mut out: Vec<FeatureSpace> = FeatureSpace::FUSION_ORDER.into_iter().filter(|s| self.spaces.contains(s)).collect();
        if self.fusion {
            out.push(FeatureSpace::Fusion);
        }
        out
    }

    pub fn surf(&self) -> SurfParams {
        SurfParams {
            octaves: self.surf_octaves,
            threshold: self.surf_threshold,
            keep_fraction: self.surf_keep_fraction,
            upright: self.surf_upright,
            ..SurfParams::default()
        }
    }

    pub fn vocabulary(&self) -> VocabularyParams {
        VocabularyParams {
            k: self.vocab_k,
            image_fraction: self.vocab_image_fraction,
            seed: self.seed,
            max_iter: self.vocab_max_iter,
            ..VocabularyParams::default()
        }
    }

    pub fn skipgram(&self) -> SkipGramParams {
        SkipGramParams {
            dim: self.text_dim,
            window: self.text_window,
            negatives: self.text_negatives,
            epochs: self.text_epochs,
            min_count: self.text_min_count,
            learning_rate: self.text_learning_rate,
            seed: self.seed,
            ..SkipGramParams::default()
        }
    }

    pub fn glocal(&self) -> GlocalParams {
        GlocalParams {
            k: self.glocal_k,
            g: self.glocal_g,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            lambda3: self.lambda3,
            lambda4: self.lambda4,
            max_sweeps: self.glocal_max_sweeps,
            tol: self.glocal_tol,
            seed: self.seed,
        }
    }
}
