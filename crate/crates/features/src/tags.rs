//! Tag dictionaries and tag-occurrence histograms from recognizer output.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use needscope_core::io::tags_path;
use needscope_core::{FeatureSpace, FeatureVector};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FeatureError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagSource {
    /// General object tags, counted.
    Objects,
    /// Mutually exclusive scene categories, weighted by score.
    Scenes,
}

impl TagSource {
    pub fn file_name(self) -> &'static str {
        match self {
            TagSource::Objects => "azure.json",
            TagSource::Scenes => "places.json",
        }
    }

    pub fn space(self) -> FeatureSpace {
        match self {
            TagSource::Objects => FeatureSpace::Azure,
            TagSource::Scenes => FeatureSpace::Places,
        }
    }
}

impl std::str::FromStr for TagSource {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "objects" | "azure" => Ok(TagSource::Objects),
            "scenes" | "places" => Ok(TagSource::Scenes),
            other => Err(FeatureError::format("tag source", format!("unknown source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagObservation {
    pub image_ref: String,
    pub tag: String,
    pub score: f64,
}

impl TagObservation {
    /// Case-folds the tag and checks the score lies in [0, 1].
    pub fn new(image_ref: impl Into<String>, tag: &str, score: f64) -> Result<Self> {
        let image_ref = image_ref.into();
        let tag = tag.trim().to_lowercase();
        if tag.is_empty() {
            return Err(FeatureError::EmptyTag(image_ref));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(FeatureError::BadScore { tag, score });
        }
        Ok(TagObservation { image_ref, tag, score })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagDictionary {
    pub source: TagSource,
    tags: Vec<String>,
}

impl TagDictionary {
    /// Sorts and deduplicates `tags` after case-folding.
    pub fn new(source: TagSource, tags: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = tags.into_iter().map(|t| t.to_lowercase()).collect();
        TagDictionary { source, tags: set.into_iter().collect() }
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn index_of(&self, tag: &str) -> Option<usize> {
        self.tags.binary_search_by(|t| t.as_str().cmp(tag)).ok()
    }
}

pub fn build_dictionary<'a, I>(observations: I, source: TagSource) -> TagDictionary
where
    I: IntoIterator<Item = &'a TagObservation>,
{
    let dict = TagDictionary::new(source, observations.into_iter().map(|o| o.tag.clone()));
    if dict.is_empty() {
        log::warn!("no {source:?} tags observed; dictionary is empty");
    }
    dict
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagHistogram {
    pub vector: FeatureVector,
    /// Observations whose tag is absent from the dictionary.
    pub dropped: usize,
}

/// Counts occurrences of each dictionary tag, L1-normalized. Observations
/// scoring below `min_score` are ignored when it is given.
pub fn object_histogram(observations: &[TagObservation], dict: &TagDictionary, min_score: Option<f64>) -> TagHistogram {
    accumulate(observations, dict, min_score, FeatureSpace::Azure, |_| 1.0)
}

/// Sums the score mass of each dictionary tag, L1-normalized.
pub fn scene_histogram(observations: &[TagObservation], dict: &TagDictionary, min_score: Option<f64>) -> TagHistogram {
    accumulate(observations, dict, min_score, FeatureSpace::Places, |o| o.score)
}

/// Dispatches on the dictionary's source.
pub fn histogram(observations: &[TagObservation], dict: &TagDictionary, min_score: Option<f64>) -> TagHistogram {
    match dict.source {
        TagSource::Objects => object_histogram(observations, dict, min_score),
        TagSource::Scenes => scene_histogram(observations, dict, min_score),
    }
}

fn accumulate(
    observations: &[TagObservation],
    dict: &TagDictionary,
    min_score: Option<f64>,
    space: FeatureSpace,
    weight: impl Fn(&TagObservation) -> f64,
) -> TagHistogram {
    let mut mass = vec![0.0; dict.len()];
    let mut dropped = 0;
    for o in observations.iter().filter(|o| min_score.is_none_or(|m| o.score >= m)) {
        match dict.index_of(&o.tag) {
            Some(i) => mass[i] += weight(o),
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("{dropped} observations with tags outside the {:?} dictionary dropped", dict.source);
    }
    let total: f64 = mass.iter().sum();
    let vector = if total > 0.0 {
        FeatureVector { space, values: mass.into_iter().map(|m| m / total).collect(), degenerate: false }
    } else {
        FeatureVector::degenerate(space, dict.len())
    };
    TagHistogram { vector, dropped }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTag {
    pub tag: String,
    pub score: f64,
}

/// One image entry of a `tags/*.json` fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTags {
    pub image: String,
    pub tags: Vec<ScoredTag>,
}

pub fn observations_from_entries(entries: &[ImageTags]) -> Result<Vec<TagObservation>> {
    entries
        .iter()
        .flat_map(|e| e.tags.iter().map(move |t| TagObservation::new(e.image.clone(), &t.tag, t.score)))
        .collect()
}

pub fn entries_from_observations(observations: &[TagObservation]) -> Vec<ImageTags> {
    let mut out: Vec<ImageTags> = Vec::new();
    for o in observations {
        let tag = ScoredTag { tag: o.tag.clone(), score: o.score };
        match out.last_mut() {
            Some(last) if last.image == o.image_ref => last.tags.push(tag),
            _ => out.push(ImageTags { image: o.image_ref.clone(), tags: vec![tag] }),
        }
    }
    out
}

pub fn write_tag_file(path: &Path, observations: &[TagObservation]) -> Result<()> {
    let io_err = |source| FeatureError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let json = serde_json::to_string_pretty(&entries_from_observations(observations))
        .map_err(|source| FeatureError::Json { path: path.to_path_buf(), source })?;
    fs::write(path, json).map_err(io_err)
}

pub fn read_tag_file(path: &Path) -> Result<Vec<TagObservation>> {
    let text = fs::read_to_string(path).map_err(|source| FeatureError::Io { path: path.to_path_buf(), source })?;
    let entries: Vec<ImageTags> =
        serde_json::from_str(&text).map_err(|source| FeatureError::Json { path: path.to_path_buf(), source })?;
    observations_from_entries(&entries)
}

/// Source of per-image recognizer output.
pub trait RecognizerClient {
    fn recognize(&self, profile: &str, images: &[String], source: TagSource) -> Result<Vec<TagObservation>>;
}

/// Reads precomputed output from `<root>/profiles/<id>/tags/{azure,places}.json`.
#[derive(Debug, Clone)]
pub struct FixtureReader {
    pub root: PathBuf,
}

impl RecognizerClient for FixtureReader {
    /// Observations for images outside `images` are kept; the fixture is
    /// returned verbatim.
    fn recognize(&self, profile: &str, _images: &[String], source: TagSource) -> Result<Vec<TagObservation>> {
        read_tag_file(&tags_path(&self.root, profile, source.file_name()))
    }
}

/// Deterministic stand-in: tags drawn from a fixed vocabulary, seeded by a
/// hash of the seed, profile and image name.
#[derive(Debug, Clone)]
pub struct MockRecognizer {
    pub seed: u64,
    pub vocabulary: Vec<String>,
    pub tags_per_image: usize,
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in part.iter().chain(std::iter::once(&0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

impl RecognizerClient for MockRecognizer {
    fn recognize(&self, profile: &str, images: &[String], source: TagSource) -> Result<Vec<TagObservation>> {
        if self.vocabulary.is_empty() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for image in images {
            let h = fnv1a(&[&self.seed.to_le_bytes(), profile.as_bytes(), image.as_bytes()]);
            let mut rng = ChaCha8Rng::seed_from_u64(h);
            let n = self.tags_per_image.min(self.vocabulary.len());
            let picked: Vec<&String> = self.vocabulary.choose_multiple(&mut rng, n).collect();
            let mut budget = 1.0;
            for tag in picked {
                let score = match source {
                    TagSource::Objects => rng.random_range(0.5..1.0),
                    TagSource::Scenes => {
                        let s = budget * rng.random_range(0.2..0.6);
                        budget -= s;
                        s
                    }
                };
                out.push(TagObservation::new(image.clone(), tag, score)?);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(image: &str, tag: &str, score: f64) -> TagObservation {
        TagObservation::new(image, tag, score).unwrap()
    }

    #[test]
    fn dictionary_dedups_and_sorts() {
        let o = [obs("a", "indoor", 0.9), obs("a", "Person", 0.8), obs("b", "people", 0.5), obs("b", "person", 0.4)];
        let d = build_dictionary(&o, TagSource::Objects);
        assert_eq!(d.tags(), ["indoor", "people", "person"]);
        let mut rev = o.to_vec();
        rev.reverse();
        assert_eq!(build_dictionary(&rev, TagSource::Objects), d);
    }

    #[test]
    fn object_counts() {
        let d = TagDictionary::new(TagSource::Objects, ["indoor", "people", "person"].map(String::from));
        let o = [obs("a", "indoor", 0.9), obs("a", "person", 0.3), obs("b", "indoor", 0.7)];
        let h = object_histogram(&o, &d, None);
        assert_eq!(h.vector.values, vec![2.0 / 3.0, 0.0, 1.0 / 3.0]);
        assert_eq!(h.vector.space, FeatureSpace::Azure);
        // threshold flag drops the weak person tag
        let h = object_histogram(&o, &d, Some(0.5));
        assert_eq!(h.vector.values, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn scene_scores_weight_mass() {
        let d = TagDictionary::new(TagSource::Scenes, ["cafeteria", "restaurant"].map(String::from));
        let o = [obs("a", "restaurant", 0.247), obs("a", "cafeteria", 0.236)];
        let h = scene_histogram(&o, &d, None);
        assert!((h.vector.values[0] - 0.236 / 0.483).abs() < 1e-12);
        assert!((h.vector.values[1] - 0.247 / 0.483).abs() < 1e-12);
        let doubled: Vec<_> = o.iter().map(|x| obs(&x.image_ref, &x.tag, x.score * 2.0)).collect();
        let h2 = scene_histogram(&doubled, &d, None);
        for (a, b) in h.vector.values.iter().zip(&h2.vector.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_zero_mass_are_degenerate() {
        let d = TagDictionary::new(TagSource::Scenes, ["x", "y"].map(String::from));
        assert!(scene_histogram(&[], &d, None).vector.degenerate);
        let h = scene_histogram(&[obs("a", "x", 0.0)], &d, None);
        assert!(h.vector.degenerate);
        assert_eq!(h.vector.values, vec![0.0, 0.0]);
    }

    #[test]
    fn unknown_tags_dropped_and_counted() {
        let d = TagDictionary::new(TagSource::Objects, ["x".to_string()]);
        let h = object_histogram(&[obs("a", "x", 1.0), obs("a", "zzz", 1.0)], &d, None);
        assert_eq!(h.dropped, 1);
        assert_eq!(h.vector.values, vec![1.0]);
    }

    #[test]
    fn invalid_observations() {
        assert!(matches!(TagObservation::new("a", "x", 1.3), Err(FeatureError::BadScore { .. })));
        assert!(matches!(TagObservation::new("a", "  ", 0.3), Err(FeatureError::EmptyTag(_))));
        assert!(TagObservation::new("a", "x", f64::NAN).is_err());
    }

    #[test]
    fn mock_is_deterministic() {
        let m = MockRecognizer { seed: 4, vocabulary: (0..20).map(|i| format!("t{i}")).collect(), tags_per_image: 3 };
        let images = vec!["a.png".to_string(), "b.png".to_string()];
        for source in [TagSource::Objects, TagSource::Scenes] {
            let a = m.recognize("p", &images, source).unwrap();
            assert_eq!(a, m.recognize("p", &images, source).unwrap());
            assert_eq!(a.len(), 6);
        }
        let other = MockRecognizer { seed: 5, ..m.clone() };
        assert_ne!(m.recognize("p", &images, TagSource::Objects).unwrap(), other.recognize("p", &images, TagSource::Objects).unwrap());
    }
}
