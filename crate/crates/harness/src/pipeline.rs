//! Per-fold feature construction: components fitted on training profiles
//! only, then applied to every profile.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use needscope_core::{FeatureSpace, FeatureVector, Region};
use needscope_features::bovw::{build_vocabulary, encode, profile_descriptors, Vocabulary};
use needscope_features::tags::{build_dictionary, histogram, TagDictionary, TagSource};
use needscope_features::text::{profile_tokens, tokenize, train_skipgram, user_vector, EmbeddingTable};
use needscope_features::FeatureError;

use crate::config::ExperimentConfig;
use crate::corpus::Corpus;
use crate::error::Result;
use crate::fusion::fuse;

/// Trained components of one fold. Components of spaces that are not
/// required stay `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldFit {
    pub vocabulary: Option<Vocabulary>,
    pub objects: Option<TagDictionary>,
    pub scenes: Option<TagDictionary>,
    /// Regions whose training text was too thin to train on are absent;
    /// their profiles get degenerate text vectors.
    pub embeddings: Option<BTreeMap<Region, EmbeddingTable>>,
}

pub fn fit_fold(corpus: &Corpus, train: &[usize], cfg: &ExperimentConfig) -> Result<FoldFit> {
    let required = cfg.required_spaces();
    let subset = corpus.dataset.subset(train)?;
    let vocabulary = if required.contains(&FeatureSpace::BoVW) {
        Some(build_vocabulary(&subset, &corpus.descriptors, &cfg.vocabulary())?)
    } else {
        None
    };
    let dictionary = |space, source, obs: &[Vec<_>]| {
        required.contains(&space).then(|| build_dictionary(train.iter().flat_map(|&i| obs[i].iter()), source))
    };
    let objects = dictionary(FeatureSpace::Azure, TagSource::Objects, &corpus.objects);
    let scenes = dictionary(FeatureSpace::Places, TagSource::Scenes, &corpus.scenes);
    let embeddings = if required.contains(&FeatureSpace::Text) { Some(embed_regions(&subset, cfg)?) } else { None };
    Ok(FoldFit { vocabulary, objects, scenes, embeddings })
}

fn embed_regions(subset: &needscope_core::Dataset, cfg: &ExperimentConfig) -> Result<BTreeMap<Region, EmbeddingTable>> {
    let params = cfg.skipgram();
    let mut out = BTreeMap::new();
    for (region, members) in subset.by_region() {
        let sentences: Vec<Vec<String>> = members
            .iter()
            .flat_map(|&i| subset.profiles()[i].captions.iter())
            .map(|c| tokenize(&c.caption, &c.hashtags))
            .filter(|s| !s.is_empty())
            .collect();
        match train_skipgram(&sentences, &params) {
            Ok(table) => {
                out.insert(region, table);
            }
            Err(FeatureError::EmptyVocabulary) => log::warn!("region {region}: no token reaches min_count; its text vectors are zero"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

impl FoldFit {
    /// FNV-1a over every trained number and word, for leakage checks.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        if let Some(v) = &self.vocabulary {
            v.centers.iter().flatten().for_each(|x| eat(&x.to_le_bytes()));
        }
        for d in [&self.objects, &self.scenes].into_iter().flatten() {
            d.tags().iter().for_each(|t| eat(t.as_bytes()));
        }
        for (region, table) in self.embeddings.iter().flatten() {
            eat(region.as_str().as_bytes());
            for w in table.vocabulary() {
                eat(w.as_bytes());
                table.vector(w).into_iter().flatten().for_each(|x| eat(&x.to_le_bytes()));
            }
        }
        h
    }
}

/// Feature vector of profile `i` in `space`.
pub fn profile_vector(corpus: &Corpus, fit: &FoldFit, i: usize, space: FeatureSpace, cfg: &ExperimentConfig) -> Result<FeatureVector> {
    let profile = &corpus.dataset.profiles()[i];
    let missing = || crate::error::HarnessError::MissingSpace { profile: profile.id.clone(), space: space.to_string() };
    Ok(match space {
        FeatureSpace::BoVW => {
            let vocab = fit.vocabulary.as_ref().ok_or_else(missing)?;
            let ds: Vec<&[f64]> = profile_descriptors(&corpus.descriptors, &profile.id).into_iter().map(|d| d.values()).collect();
            encode(&ds, vocab)?
        }
        FeatureSpace::Azure => histogram(&corpus.objects[i], fit.objects.as_ref().ok_or_else(missing)?, cfg.tag_min_score).vector,
        FeatureSpace::Places => histogram(&corpus.scenes[i], fit.scenes.as_ref().ok_or_else(missing)?, cfg.tag_min_score).vector,
        FeatureSpace::Text => {
            let tables = fit.embeddings.as_ref().ok_or_else(missing)?;
            match tables.get(&profile.region) {
                Some(table) => user_vector(&profile_tokens(profile), table).vector,
                None => FeatureVector::degenerate(FeatureSpace::Text, cfg.text_dim),
            }
        }
        FeatureSpace::Fusion => {
            let mut blocks = BTreeMap::new();
            for &s in &cfg.fusion_blocks {
                blocks.insert(s, profile_vector(corpus, fit, i, s, cfg)?);
            }
            fuse(&profile.id, &blocks, &cfg.fusion_blocks)?
        }
    })
}

/// Features of every profile as columns, plus the degenerate flags.
pub fn feature_matrix(corpus: &Corpus, fit: &FoldFit, space: FeatureSpace, cfg: &ExperimentConfig) -> Result<(DMatrix<f64>, Vec<bool>)> {
    let vectors = (0..corpus.dataset.len()).map(|i| profile_vector(corpus, fit, i, space, cfg)).collect::<Result<Vec<_>>>()?;
    let dim = vectors.first().map_or(0, FeatureVector::dim);
    let x = DMatrix::from_fn(dim, vectors.len(), |r, c| vectors[c].values[r]);
    Ok((x, vectors.iter().map(|v| v.degenerate).collect()))
}

/// Z-scores each feature with training statistics and appends a constant
/// bias row. Constant features are only centred.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>, train: &[usize]) -> Self {
        let n = train.len().max(1) as f64;
        let mut mean = vec![0.0; x.nrows()];
        let mut scale = vec![1.0; x.nrows()];
        for r in 0..x.nrows() {
            let m = train.iter().map(|&c| x[(r, c)]).sum::<f64>() / n;
            let var = train.iter().map(|&c| (x[(r, c)] - m).powi(2)).sum::<f64>() / n;
            mean[r] = m;
            if var > 1e-24 {
                scale[r] = var.sqrt();
            }
        }
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &DMatrix<f64>, columns: &[usize]) -> DMatrix<f64> {
        let d = x.nrows();
        DMatrix::from_fn(d + 1, columns.len(), |r, j| if r == d { 1.0 } else { (x[(r, columns[j])] - self.mean[r]) / self.scale[r] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_uses_training_columns_only() {
        let x = DMatrix::from_row_slice(2, 4, &[1.0, 3.0, 5.0, 100.0, 2.0, 2.0, 2.0, 7.0]);
        let s = Standardizer::fit(&x, &[0, 1, 2]);
        assert_eq!(s.mean, vec![3.0, 2.0]);
        assert_eq!(s.scale[1], 1.0);
        let z = s.apply(&x, &[0, 2, 3]);
        assert_eq!(z.nrows(), 3);
        assert!((z[(0, 0)] + z[(0, 1)]).abs() < 1e-12);
        assert_eq!(z[(1, 2)], 5.0);
        assert!(z.row(2).iter().all(|&b| b == 1.0));
    }
}
