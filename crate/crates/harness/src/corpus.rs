//! Everything the evaluation reads per profile, extracted once: SURF
//! descriptors per image and recognizer tags per profile.

use std::path::Path;

use needscope_core::io::image_path;
use needscope_core::{load_dataset, load_gray, Dataset, FeatureSpace, GlasserLabelSet, GrayImage, ProfileRecord};
use needscope_features::bovw::{image_key, DescriptorStore};
use needscope_features::surf::{extract, GrayMatrix, SurfDescriptor, SurfParams};
use needscope_features::tags::{FixtureReader, RecognizerClient, TagObservation, TagSource};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::synth::SynthData;

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub dataset: Dataset,
    pub descriptors: DescriptorStore,
    /// Object and scene observations, one list per profile in dataset order.
    pub objects: Vec<Vec<TagObservation>>,
    pub scenes: Vec<Vec<TagObservation>>,
}

/// SURF descriptors of every image, extracted in parallel on the current
/// rayon pool. Output order does not depend on scheduling.
pub fn extract_all(images: &[(String, GrayImage)], params: &SurfParams) -> Result<DescriptorStore> {
    let described: Vec<(String, Vec<SurfDescriptor>)> = images
        .par_iter()
        .map(|(key, img)| {
            let m = GrayMatrix::from_gray(img)?;
            let found = extract(&m, params)?;
            Ok((key.clone(), found.into_iter().map(|(_, d)| d).collect()))
        })
        .collect::<Result<_>>()?;
    Ok(described.into_iter().collect())
}

impl Corpus {
    /// Builds a corpus from generated data, extracting SURF only when a
    /// required space needs it.
    pub fn from_synth(data: &SynthData, cfg: &ExperimentConfig) -> Result<Self> {
        let descriptors = if cfg.required_spaces().contains(&FeatureSpace::BoVW) {
            let images: Vec<(String, GrayImage)> = data.images.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
            extract_all(&images, &cfg.surf())?
        } else {
            DescriptorStore::new()
        };
        let corpus = Corpus { dataset: data.dataset.clone(), descriptors, objects: data.objects.clone(), scenes: data.scenes.clone() };
        corpus.check(cfg)?;
        Ok(corpus)
    }

    /// Loads a dataset directory. Images are decoded and described only for
    /// BoVW; tag fixtures are read only for the tag spaces.
    pub fn load(root: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        let (dataset, report) = load_dataset(root)?;
        for w in &report.warnings {
            log::warn!("{w}");
        }
        let required = cfg.required_spaces();
        let descriptors = if required.contains(&FeatureSpace::BoVW) {
            let images = load_images(root, &dataset)?;
            extract_all(&images, &cfg.surf())?
        } else {
            DescriptorStore::new()
        };
        let reader = FixtureReader { root: root.to_path_buf() };
        let tags = |space: FeatureSpace, source: TagSource| -> Result<Vec<Vec<TagObservation>>> {
            if !required.contains(&space) {
                return Ok(vec![Vec::new(); dataset.len()]);
            }
            dataset.profiles().iter().map(|p| Ok(reader.recognize(&p.id, &p.image_refs, source)?)).collect()
        };
        let objects = tags(FeatureSpace::Azure, TagSource::Objects)?;
        let scenes = tags(FeatureSpace::Places, TagSource::Scenes)?;
        let corpus = Corpus { dataset, descriptors, objects, scenes };
        corpus.check(cfg)?;
        Ok(corpus)
    }

    /// Every required space must be buildable from the data.
    pub fn check(&self, cfg: &ExperimentConfig) -> Result<()> {
        let required = cfg.required_spaces();
        if self.dataset.len() < 3 {
            return Err(HarnessError::Validation(format!("leave-one-subject-out needs at least 3 profiles, got {}", self.dataset.len())));
        }
        if required.contains(&FeatureSpace::Text) && self.dataset.caption_count() == 0 {
            return Err(HarnessError::Validation("text space selected but the dataset has no captions".into()));
        }
        for (space, obs) in [(FeatureSpace::Azure, &self.objects), (FeatureSpace::Places, &self.scenes)] {
            if required.contains(&space) && obs.iter().all(Vec::is_empty) {
                return Err(HarnessError::Validation(format!("{space} space selected but no tag observations were found")));
            }
        }
        if required.contains(&FeatureSpace::BoVW) && self.descriptors.values().all(Vec::is_empty) {
            return Err(HarnessError::Validation("bovw space selected but no SURF keypoints were found".into()));
        }
        Ok(())
    }

    /// The same corpus with labels shuffled across profiles.
    pub fn with_permuted_labels(&self, seed: u64) -> Result<Self> {
        Ok(Corpus { dataset: permute_labels(&self.dataset, seed)?, ..self.clone() })
    }
}

/// Decodes every listed image, keyed `<profile>/<image>`.
pub fn load_images(root: &Path, dataset: &Dataset) -> Result<Vec<(String, GrayImage)>> {
    let mut out = Vec::with_capacity(dataset.image_count());
    for p in dataset.profiles() {
        for r in &p.image_refs {
            out.push((image_key(&p.id, r), load_gray(&image_path(root, &p.id, r))?));
        }
    }
    Ok(out)
}

/// Reassigns the label sets to profiles by a seeded permutation.
pub fn permute_labels(dataset: &Dataset, seed: u64) -> Result<Dataset> {
    let mut labels: Vec<GlasserLabelSet> = dataset.profiles().iter().map(|p| p.labels).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let profiles: Vec<ProfileRecord> = dataset.profiles().iter().zip(labels).map(|(p, labels)| ProfileRecord { labels, ..p.clone() }).collect();
    Ok(Dataset::new(profiles)?)
}
