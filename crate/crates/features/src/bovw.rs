//! Visual vocabulary construction and bag-of-visual-words encoding.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use needscope_core::{Dataset, FeatureSpace, FeatureVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FeatureError, Result};
use crate::kmeans::{kmeans, nearest_center};
use crate::surf::{SurfDescriptor, DESCRIPTOR_LEN};

/// Descriptors per image, keyed `<profile>/<image>`.
pub type DescriptorStore = BTreeMap<String, Vec<SurfDescriptor>>;

pub fn image_key(profile: &str, image: &str) -> String {
    format!("{profile}/{image}")
}

/// Image keys of every profile in `dataset`, in profile then image order.
pub fn image_keys(dataset: &Dataset) -> Vec<String> {
    dataset.profiles().iter().flat_map(|p| p.image_refs.iter().map(move |im| image_key(&p.id, im))).collect()
}

/// All descriptors of one profile, in image order.
pub fn profile_descriptors<'a>(store: &'a DescriptorStore, profile: &str) -> Vec<&'a SurfDescriptor> {
    let prefix = format!("{profile}/");
    store.range(prefix.clone()..).take_while(|(k, _)| k.starts_with(&prefix)).flat_map(|(_, v)| v.iter()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyParams {
    pub k: usize,
    pub image_fraction: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for VocabularyParams {
    fn default() -> Self {
        VocabularyParams { k: 256, image_fraction: 0.30, seed: 0, max_iter: 100, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub centers: Vec<Vec<f64>>,
    pub seed: u64,
    pub image_fraction: f64,
    pub iterations: usize,
}

impl Vocabulary {
    /// Checks shape, finiteness and that no two centers coincide.
    pub fn new(centers: Vec<Vec<f64>>, seed: u64, image_fraction: f64, iterations: usize) -> Result<Self> {
        if let Some(c) = centers.iter().find(|c| c.len() != DESCRIPTOR_LEN) {
            return Err(FeatureError::Dimension { expected: DESCRIPTOR_LEN, actual: c.len() });
        }
        if centers.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FeatureError::format("vocabulary", "non-finite center"));
        }
        let mut sorted: Vec<&Vec<f64>> = centers.iter().collect();
        sorted.sort_by(|a, b| a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
        let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
        if distinct < centers.len() {
            return Err(FeatureError::TooFewDistinct { distinct, k: centers.len() });
        }
        Ok(Vocabulary { centers, seed, image_fraction, iterations })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,dim,seed,image_fraction,iterations")?;
        writeln!(w, "{},{},{},{},{}", self.k(), DESCRIPTOR_LEN, self.seed, self.image_fraction, self.iterations)?;
        for c in &self.centers {
            let row: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let bad = |m: String| FeatureError::format("vocabulary file", m);
        let mut lines = r.lines().map(|l| l.map_err(|e| bad(e.to_string())));
        let _header = lines.next().ok_or_else(|| bad("missing header".into()))??;
        let meta = lines.next().ok_or_else(|| bad("missing metadata row".into()))??;
        let meta: Vec<&str> = meta.split(',').collect();
        if meta.len() != 5 {
            return Err(bad(format!("metadata row has {} fields", meta.len())));
        }
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| bad(e.to_string()));
        let k = parse_usize(meta[0])?;
        let dim = parse_usize(meta[1])?;
        let seed = meta[2].parse::<u64>().map_err(|e| bad(e.to_string()))?;
        let fraction = meta[3].parse::<f64>().map_err(|e| bad(e.to_string()))?;
        let iterations = parse_usize(meta[4])?;
        let mut centers = Vec::with_capacity(k);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line.split(',').map(|v| v.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>().map_err(|e| bad(e.to_string()))?;
            if row.len() != dim {
                return Err(FeatureError::Dimension { expected: dim, actual: row.len() });
            }
            centers.push(row);
        }
        if centers.len() != k {
            return Err(bad(format!("expected {k} centers, found {}", centers.len())));
        }
        Vocabulary::new(centers, seed, fraction, iterations)
    }
}

/// Number of images drawn for a fraction, `ceil(fraction · n)` and at least one.
pub fn sample_size(fraction: f64, n: usize) -> usize {
    (((fraction * n as f64) - 1e-9).ceil() as usize).clamp(1, n.max(1))
}

/// Samples `ceil(image_fraction · #images)` of the dataset's images uniformly
/// (seeded), pools their descriptors and clusters them into `k` words.
pub fn build_vocabulary(dataset: &Dataset, store: &DescriptorStore, params: &VocabularyParams) -> Result<Vocabulary> {
    let keys = image_keys(dataset);
    if keys.iter().all(|k| store.get(k).is_none_or(Vec::is_empty)) {
        return Err(FeatureError::NoDescriptors);
    }
    let m = sample_size(params.image_fraction, keys.len());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut picked = rand::seq::index::sample(&mut rng, keys.len(), m).into_vec();
    picked.sort_unstable();
    let pool: Vec<&[f64]> = picked
        .iter()
        .filter_map(|&i| store.get(&keys[i]))
        .flat_map(|ds| ds.iter().map(|d| d.values()))
        .collect();
    if pool.len() < params.k {
        return Err(FeatureError::VocabularyPoolTooSmall { available: pool.len(), k: params.k });
    }
    let fit = kmeans(&pool, params.k, params.seed, params.max_iter, params.tol)?;
    Vocabulary::new(fit.centers, params.seed, params.image_fraction, fit.iterations)
}

/// Histogram of nearest visual words (lowest index on ties), L1-normalized.
/// An empty descriptor list gives the degenerate zero vector.
pub fn encode<D: AsRef<[f64]>>(descriptors: &[D], vocab: &Vocabulary) -> Result<FeatureVector> {
    if descriptors.is_empty() {
        return Ok(FeatureVector::degenerate(FeatureSpace::BoVW, vocab.k()));
    }
    let mut counts = vec![0.0; vocab.k()];
    for d in descriptors {
        let d = d.as_ref();
        if d.len() != DESCRIPTOR_LEN {
            return Err(FeatureError::Dimension { expected: DESCRIPTOR_LEN, actual: d.len() });
        }
        counts[nearest_center(d, &vocab.centers).0] += 1.0;
    }
    let total = descriptors.len() as f64;
    Ok(FeatureVector::new(FeatureSpace::BoVW, counts.into_iter().map(|c| c / total).collect())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use needscope_core::{Gender, ProfileRecord, Region};
    use rand::Rng;

    fn unit(i: usize) -> Vec<f64> {
        let mut v = vec![0.0; 64];
        v[i] = 1.0;
        v
    }

    fn vocab(k: usize) -> Vocabulary {
        Vocabulary::new((0..k).map(unit).collect(), 0, 1.0, 0).unwrap()
    }

    fn dataset(n_images: usize) -> Dataset {
        Dataset::new(vec![ProfileRecord {
            id: "p".into(),
            region: Region::spain(),
            gender: Gender::Unknown,
            image_refs: (0..n_images).map(|i| format!("{i:02}.png")).collect(),
            captions: vec![],
            labels: "10000".parse().unwrap(),
        }])
        .unwrap()
    }

    fn random_descriptors(rng: &mut ChaCha8Rng, n: usize) -> Vec<SurfDescriptor> {
        (0..n).map(|_| SurfDescriptor((0..64).map(|_| rng.random::<f64>()).collect())).collect()
    }

    #[test]
    fn one_hot_for_single_descriptor() {
        let v = encode(&[unit(7)], &vocab(10)).unwrap();
        assert_eq!(v.values, unit(7)[..10].to_vec());
        assert!(!v.degenerate);
    }

    #[test]
    fn empty_input_is_degenerate() {
        let v = encode::<Vec<f64>>(&[], &vocab(4)).unwrap();
        assert!(v.degenerate);
        assert_eq!(v.values, vec![0.0; 4]);
    }

    #[test]
    fn wrong_dimension_rejected() {
        assert!(matches!(encode(&[vec![0.0; 32]], &vocab(4)), Err(FeatureError::Dimension { .. })));
    }

    #[test]
    fn histogram_matches_exhaustive_nearest_neighbour() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let centers = random_descriptors(&mut rng, 12).into_iter().map(|d| d.0).collect();
        let vocab = Vocabulary::new(centers, 0, 1.0, 0).unwrap();
        let descs = random_descriptors(&mut rng, 100);
        let hist = encode(&descs, &vocab).unwrap();
        let mut counts = [0usize; 12];
        for d in &descs {
            let mut best = 0;
            for c in 1..12 {
                let dc: f64 = d.0.iter().zip(&vocab.centers[c]).map(|(a, b)| (a - b).powi(2)).sum();
                let db: f64 = d.0.iter().zip(&vocab.centers[best]).map(|(a, b)| (a - b).powi(2)).sum();
                if dc < db {
                    best = c;
                }
            }
            counts[best] += 1;
        }
        let expected: Vec<f64> = counts.iter().map(|&c| c as f64 / 100.0).collect();
        assert_eq!(hist.values, expected);
        assert!((hist.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let mut reversed = descs.clone();
        reversed.reverse();
        assert_eq!(encode(&reversed, &vocab).unwrap(), hist);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut a = vec![0.0; 64];
        a[0] = 1.0;
        let mut b = vec![0.0; 64];
        b[1] = 1.0;
        let v = Vocabulary::new(vec![b.clone(), a.clone()], 0, 1.0, 0).unwrap();
        let mut mid = vec![0.0; 64];
        mid[0] = 0.5;
        mid[1] = 0.5;
        assert_eq!(encode(&[mid], &v).unwrap().values, vec![1.0, 0.0]);
    }

    #[test]
    fn duplicate_centers_rejected() {
        assert!(matches!(Vocabulary::new(vec![unit(1), unit(1)], 0, 1.0, 0), Err(FeatureError::TooFewDistinct { .. })));
    }

    #[test]
    fn sample_sizes() {
        assert_eq!(sample_size(0.3, 10), 3);
        assert_eq!(sample_size(1.0, 10), 10);
        assert_eq!(sample_size(0.01, 10), 1);
        assert_eq!(sample_size(0.7, 10), 7);
    }

    fn store(rng: &mut ChaCha8Rng, d: &Dataset, per_image: usize) -> DescriptorStore {
        image_keys(d).into_iter().map(|k| (k, random_descriptors(rng, per_image))).collect()
    }

    #[test]
    fn full_fraction_uses_every_descriptor_and_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = dataset(10);
        let s = store(&mut rng, &d, 4);
        let params = VocabularyParams { k: 40, image_fraction: 1.0, seed: 5, ..Default::default() };
        // 40 words from exactly 40 descriptors reproduces them
        let v = build_vocabulary(&d, &s, &params).unwrap();
        let mut got = v.centers.clone();
        let mut all: Vec<Vec<f64>> = s.values().flatten().map(|d| d.0.clone()).collect();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        all.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(got, all);
        let params = VocabularyParams { k: 8, image_fraction: 0.3, seed: 5, ..Default::default() };
        assert_eq!(build_vocabulary(&d, &s, &params).unwrap(), build_vocabulary(&d, &s, &params).unwrap());
    }

    #[test]
    fn small_pool_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = dataset(10);
        let s = store(&mut rng, &d, 4);
        // 3 images x 4 descriptors < 13 words
        let params = VocabularyParams { k: 13, image_fraction: 0.3, seed: 1, ..Default::default() };
        assert!(matches!(build_vocabulary(&d, &s, &params), Err(FeatureError::VocabularyPoolTooSmall { available: 12, k: 13 })));
        assert!(matches!(build_vocabulary(&d, &DescriptorStore::new(), &params), Err(FeatureError::NoDescriptors)));
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let centers = random_descriptors(&mut rng, 5).into_iter().map(|d| d.0).collect();
        let v = Vocabulary::new(centers, 17, 0.3, 9).unwrap();
        let mut buf = Vec::new();
        v.write(&mut buf).unwrap();
        assert_eq!(Vocabulary::read(buf.as_slice()).unwrap(), v);
    }

    #[test]
    fn profile_descriptor_lookup_respects_prefix() {
        let mut s = DescriptorStore::new();
        s.insert(image_key("p1", "a.png"), vec![SurfDescriptor(unit(0))]);
        s.insert(image_key("p10", "a.png"), vec![SurfDescriptor(unit(1))]);
        s.insert(image_key("p1", "b.png"), vec![SurfDescriptor(unit(2))]);
        let got = profile_descriptors(&s, "p1");
        assert_eq!(got.len(), 2);
    }
}
