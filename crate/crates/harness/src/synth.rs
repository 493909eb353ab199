//! Synthetic profiles with planted label structure.
//!
//! Labels come from a latent-class mixture of independent Bernoullis,
//! conditioned on a non-empty label set. Every modality carries label
//! signal: each image motif, caption token and recognizer tag is drawn,
//! with probability `signal`, from a pool tied to one of the profile's
//! positive labels and otherwise from a shared background pool.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use needscope_core::io::{image_path, save_dataset, tags_path};
use needscope_core::{Caption, Dataset, GlasserLabelSet, Gender, GrayImage, Need, ProfileRecord, Region};
use needscope_features::tags::{write_tag_file, TagObservation, TagSource};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

const L: usize = Need::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n: usize,
    pub images_per_profile: usize,
    /// Square image side in pixels.
    pub image_size: usize,
    /// Motifs per image, laid out on a jittered grid.
    pub motifs_per_image: usize,
    pub captions_per_profile: usize,
    pub tokens_per_caption: usize,
    pub object_tags_per_image: usize,
    pub scene_tags_per_image: usize,
    /// Latent classes of the label model.
    pub classes: usize,
    /// Probability that a motif, token or tag follows a positive label.
    pub signal: f64,
    pub regions: Vec<Region>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 20,
            images_per_profile: 6,
            image_size: 192,
            motifs_per_image: 9,
            captions_per_profile: 6,
            tokens_per_caption: 8,
            object_tags_per_image: 5,
            scene_tags_per_image: 5,
            classes: 4,
            signal: 0.7,
            regions: vec![Region::iran(), Region::spain()],
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(format!("infeasible synthetic spec: {m}")));
        if self.n == 0 {
            return bad("n = 0 profiles");
        }
        if self.classes == 0 {
            return bad("label model needs at least one latent class");
        }
        if self.regions.is_empty() {
            return bad("no regions");
        }
        if self.images_per_profile == 0 {
            return bad("profiles need at least one image");
        }
        if self.image_size < 96 {
            return bad("image_size below 96 leaves no room for descriptor windows");
        }
        if !(0.0..=1.0).contains(&self.signal) {
            return bad("signal outside [0, 1]");
        }
        Ok(())
    }
}

/// Mixture weights and per-class label probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModel {
    pub weights: Vec<f64>,
    pub probs: Vec<[f64; L]>,
}

impl LabelModel {
    /// Class 0 always favours the first two labels, which plants a positive
    /// correlation between them; other classes favour two random labels.
    fn random(classes: usize, rng: &mut ChaCha8Rng) -> Self {
        let raw: Vec<f64> = (0..classes).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / total).collect();
        let probs = (0..classes)
            .map(|c| {
                let (a, b) = if c == 0 {
                    (0, 1)
                } else {
                    let a = c % L;
                    let mut b = rng.random_range(0..L - 1);
                    if b >= a {
                        b += 1;
                    }
                    (a, b)
                };
                let mut p = [0.0; L];
                for (l, v) in p.iter_mut().enumerate() {
                    *v = if l == a || l == b { rng.random_range(0.75..0.9) } else { rng.random_range(0.05..0.15) };
                }
                p
            })
            .collect();
        LabelModel { weights, probs }
    }

    /// Probability of each label set (by mask, index 0 unused) conditioned
    /// on the set being non-empty.
    pub fn set_probabilities(&self) -> [f64; 1 << L] {
        let mut out = [0.0; 1 << L];
        for (mask, slot) in out.iter_mut().enumerate().skip(1) {
            *slot = self
                .weights
                .iter()
                .zip(&self.probs)
                .map(|(w, p)| w * (0..L).map(|l| if mask >> l & 1 == 1 { p[l] } else { 1.0 - p[l] }).product::<f64>())
                .sum();
        }
        let z: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= z);
        out
    }

    /// Exact Pearson correlation of the label indicators.
    pub fn correlation(&self) -> [[f64; L]; L] {
        let p = self.set_probabilities();
        let mut mean = [0.0; L];
        let mut joint = [[0.0; L]; L];
        for (mask, &pm) in p.iter().enumerate() {
            for a in 0..L {
                if mask >> a & 1 == 1 {
                    mean[a] += pm;
                    for b in 0..L {
                        if mask >> b & 1 == 1 {
                            joint[a][b] += pm;
                        }
                    }
                }
            }
        }
        let mut corr = [[0.0; L]; L];
        for a in 0..L {
            for b in 0..L {
                let cov = joint[a][b] - mean[a] * mean[b];
                let var = (mean[a] * (1.0 - mean[a]) * mean[b] * (1.0 - mean[b])).sqrt();
                corr[a][b] = if var > 0.0 { cov / var } else { 0.0 };
            }
        }
        corr
    }

    /// Draws a class, then labels, rejecting empty sets.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> (usize, GlasserLabelSet) {
        loop {
            let mut u = rng.random::<f64>();
            let mut class = self.weights.len() - 1;
            for (c, w) in self.weights.iter().enumerate() {
                if u < *w {
                    class = c;
                    break;
                }
                u -= w;
            }
            let mut flags = [false; L];
            for (l, f) in flags.iter_mut().enumerate() {
                *f = rng.random_bool(self.probs[class][l]);
            }
            if let Ok(set) = GlasserLabelSet::new(flags) {
                return (class, set);
            }
        }
    }
}

/// Pearson correlation between the rows of a ±1 label matrix.
pub fn empirical_correlation(labels: &DMatrix<i8>) -> [[f64; L]; L] {
    let n = labels.ncols() as f64;
    let ind = labels.map(|v| if v > 0 { 1.0 } else { 0.0 });
    let mean: Vec<f64> = (0..L).map(|l| ind.row(l).sum() / n).collect();
    let mut corr = [[0.0; L]; L];
    for a in 0..L {
        for b in 0..L {
            let joint = ind.row(a).component_mul(&ind.row(b)).sum() / n;
            let var = (mean[a] * (1.0 - mean[a]) * mean[b] * (1.0 - mean[b])).sqrt();
            corr[a][b] = if var > 0.0 { (joint - mean[a] * mean[b]) / var } else { 0.0 };
        }
    }
    corr
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub spec: SynthSpec,
    pub label_model: LabelModel,
    /// Planted label correlation, exact under the label model.
    pub correlation: [[f64; L]; L],
    /// Latent class of each profile, in dataset order.
    pub classes: Vec<usize>,
}

pub struct SynthData {
    pub dataset: Dataset,
    /// Keyed `<profile>/<image>`.
    pub images: BTreeMap<String, GrayImage>,
    pub objects: Vec<Vec<TagObservation>>,
    pub scenes: Vec<Vec<TagObservation>>,
    pub truth: GroundTruth,
}

const OBJECT_POOLS: [&[&str]; L] = [
    &["food", "bread", "plate", "kitchen", "medicine", "vegetable", "fruit", "meal"],
    &["people", "group", "wedding", "child", "family", "hug", "couple", "smile"],
    &["suit", "office", "trophy", "car", "desk", "laptop", "building", "stage"],
    &["mountain", "road", "sky", "beach", "sea", "tree", "bicycle", "tent"],
    &["party", "guitar", "concert", "ball", "dance", "cake", "balloon", "game"],
];
const OBJECT_BACKGROUND: &[&str] = &["person", "indoor", "outdoor", "wall", "floor", "text", "clothing", "ground", "light", "window"];

const SCENE_POOLS: [&[&str]; L] = [
    &["kitchen", "restaurant", "cafeteria", "bakery", "pantry", "hospital_room"],
    &["living_room", "banquet_hall", "church_indoor", "home_dinette", "courtyard", "dining_room"],
    &["office", "conference_room", "lobby", "skyscraper", "parking_garage", "library"],
    &["mountain", "highway", "beach", "forest_path", "campsite", "airport_terminal"],
    &["stage_indoor", "amusement_park", "bar", "discotheque", "stadium", "arcade"],
];
const SCENE_BACKGROUND: &[&str] = &["street", "alley", "balcony", "corridor", "bedroom", "garden"];

const SPANISH_POOLS: [&[&str]; L] = [
    &["comida", "pan", "cocina", "cena", "salud", "casa", "agua", "desayuno"],
    &["familia", "amigos", "boda", "juntos", "abrazo", "hermanos", "cumpleaños", "amor"],
    &["trabajo", "oficina", "premio", "éxito", "coche", "reunión", "líder", "negocio"],
    &["viaje", "montaña", "playa", "carretera", "libertad", "aventura", "cielo", "camino"],
    &["fiesta", "concierto", "juego", "risas", "baile", "música", "cine", "diversión"],
];
const SPANISH_FILLER: &[&str] = &["hoy", "muy", "día", "aquí", "todo", "siempre", "foto", "momento", "otra", "vez", "bien", "nuevo"];

const PERSIAN_POOLS: [&[&str]; L] = [
    &["غذا", "نان", "آشپزخانه", "شام", "سلامتی", "خانه", "آب", "صبحانه"],
    &["خانواده", "دوستان", "عروسی", "باهم", "عشق", "خواهر", "برادر", "تولد"],
    &["کار", "دفتر", "جایزه", "موفقیت", "ماشین", "جلسه", "مدیر", "تجارت"],
    &["سفر", "کوه", "دریا", "جاده", "آزادی", "ماجراجویی", "آسمان", "مسیر"],
    &["جشن", "کنسرت", "بازی", "خنده", "رقص", "موسیقی", "سینما", "شادی"],
];
const PERSIAN_FILLER: &[&str] = &["امروز", "خیلی", "روز", "اینجا", "همه", "همیشه", "عکس", "لحظه", "دوباره", "خوب", "جدید", "با"];

struct Vocab {
    pools: Vec<Vec<String>>,
    filler: Vec<String>,
}

fn vocab_for(region: &Region) -> Vocab {
    let owned = |s: &[&str]| s.iter().map(|w| w.to_string()).collect::<Vec<_>>();
    match region.as_str() {
        "spain" => Vocab { pools: SPANISH_POOLS.iter().map(|p| owned(p)).collect(), filler: owned(SPANISH_FILLER) },
        "iran" => Vocab { pools: PERSIAN_POOLS.iter().map(|p| owned(p)).collect(), filler: owned(PERSIAN_FILLER) },
        other => Vocab {
            pools: Need::ALL.iter().map(|n| (0..8).map(|k| format!("{other}_{}_{k}", n.as_str())).collect()).collect(),
            filler: (0..12).map(|k| format!("{other}_w{k}")).collect(),
        },
    }
}

/// With probability `signal`, a positive label's index; otherwise `None`.
fn driving_label(labels: &[usize], signal: f64, rng: &mut ChaCha8Rng) -> Option<usize> {
    if rng.random_bool(signal) {
        labels.choose(rng).copied()
    } else {
        None
    }
}

/// Anisotropic Gaussian `(cx, cy, sx, sy, angle, amplitude)`.
type Gauss = (f64, f64, f64, f64, f64, f64);

/// Blob layouts, one per label: bright spot, dark spot, elongated ridge,
/// close pair, bright/dark dipole.
fn motif(kind: usize, cx: f64, cy: f64, rng: &mut ChaCha8Rng) -> Vec<Gauss> {
    let s = rng.random_range(3.0..4.0);
    let a = rng.random_range(0.35..0.5);
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    let (sin, cos) = angle.sin_cos();
    match kind {
        0 => vec![(cx, cy, s, s, 0.0, a)],
        1 => vec![(cx, cy, s, s, 0.0, -a)],
        2 => vec![(cx, cy, 2.2 * s, 0.8 * s, angle, a)],
        3 => {
            let d = 1.6 * s;
            vec![(cx + d * cos, cy + d * sin, 0.8 * s, 0.8 * s, 0.0, a), (cx - d * cos, cy - d * sin, 0.8 * s, 0.8 * s, 0.0, a)]
        }
        _ => {
            let d = 1.5 * s;
            vec![(cx + d * cos, cy + d * sin, s, s, 0.0, a), (cx - d * cos, cy - d * sin, s, s, 0.0, -a)]
        }
    }
}

fn render(size: usize, parts: &[Gauss], background: f64) -> GrayImage {
    let mut pixels = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let mut v = background;
            for &(cx, cy, sx, sy, angle, amp) in parts {
                let (sin, cos) = angle.sin_cos();
                let (dx, dy) = (c as f64 - cx, r as f64 - cy);
                let u = dx * cos + dy * sin;
                let w = -dx * sin + dy * cos;
                let e = u * u / (2.0 * sx * sx) + w * w / (2.0 * sy * sy);
                if e < 30.0 {
                    v += amp * (-e).exp();
                }
            }
            pixels.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    GrayImage::from_raw(size as u32, size as u32, pixels).expect("buffer matches dimensions")
}

fn image(spec: &SynthSpec, labels: &[usize], rng: &mut ChaCha8Rng) -> GrayImage {
    let grid = (spec.motifs_per_image as f64).sqrt().ceil().max(1.0) as usize;
    let cell = spec.image_size as f64 / (grid + 2) as f64;
    let background = rng.random_range(0.4..0.6);
    let mut parts = Vec::new();
    for m in 0..spec.motifs_per_image {
        let (gx, gy) = (m % grid, m / grid);
        let jitter = cell * 0.1;
        let cx = cell * (gx as f64 + 1.5) + rng.random_range(-jitter..=jitter);
        let cy = cell * (gy as f64 + 1.5) + rng.random_range(-jitter..=jitter);
        let kind = driving_label(labels, spec.signal, rng).unwrap_or_else(|| rng.random_range(0..L));
        parts.extend(motif(kind, cx, cy, rng));
    }
    render(spec.image_size, &parts, background)
}

fn pick<'a>(pools: &'a [&'a [&'a str]; L], background: &'a [&'a str], label: Option<usize>, rng: &mut ChaCha8Rng) -> &'a str {
    match label {
        Some(l) => pools[l].choose(rng).expect("non-empty pool"),
        None => background.choose(rng).expect("non-empty pool"),
    }
}

fn object_tags(spec: &SynthSpec, image: &str, labels: &[usize], rng: &mut ChaCha8Rng) -> Result<Vec<TagObservation>> {
    let mut out: Vec<TagObservation> = Vec::new();
    for _ in 0..spec.object_tags_per_image {
        let tag = pick(&OBJECT_POOLS, OBJECT_BACKGROUND, driving_label(labels, spec.signal, rng), rng);
        let score = rng.random_range(0.5..1.0);
        if !out.iter().any(|o| o.tag == tag) {
            out.push(TagObservation::new(image, tag, score)?);
        }
    }
    Ok(out)
}

fn scene_tags(spec: &SynthSpec, image: &str, labels: &[usize], rng: &mut ChaCha8Rng) -> Result<Vec<TagObservation>> {
    let mut out: Vec<TagObservation> = Vec::new();
    let mut mass = 1.0;
    for rank in 0..spec.scene_tags_per_image {
        let tag = pick(&SCENE_POOLS, SCENE_BACKGROUND, driving_label(labels, spec.signal, rng), rng);
        let score = mass * if rank == 0 { rng.random_range(0.3..0.6) } else { rng.random_range(0.2..0.5) };
        mass -= score;
        if !out.iter().any(|o| o.tag == tag) {
            out.push(TagObservation::new(image, tag, score)?);
        }
    }
    Ok(out)
}

fn captions(spec: &SynthSpec, vocab: &Vocab, images: &[String], labels: &[usize], rng: &mut ChaCha8Rng) -> Vec<Caption> {
    (0..spec.captions_per_profile)
        .map(|c| {
            let mut words = Vec::with_capacity(spec.tokens_per_caption);
            for _ in 0..spec.tokens_per_caption {
                let w = match driving_label(labels, spec.signal, rng) {
                    Some(l) => vocab.pools[l].choose(rng),
                    None => vocab.filler.choose(rng),
                };
                words.push(w.expect("non-empty pool").clone());
            }
            let hashtags = match driving_label(labels, spec.signal, rng) {
                Some(l) => vec![vocab.pools[l].choose(rng).expect("non-empty pool").clone()],
                None => vec![],
            };
            let end = ["", "!", ".", " :)"][rng.random_range(0..4)];
            Caption { image: images[c % images.len()].clone(), caption: format!("{}{end}", words.join(" ")), hashtags, geo: None }
        })
        .collect()
}

pub fn generate(spec: &SynthSpec, seed: u64) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = LabelModel::random(spec.classes, &mut rng);
    let width = spec.n.to_string().len().max(3);
    let vocabs: Vec<Vocab> = spec.regions.iter().map(vocab_for).collect();
    let mut profiles = Vec::with_capacity(spec.n);
    let mut images = BTreeMap::new();
    let (mut objects, mut scenes, mut classes) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..spec.n {
        let (class, labels) = model.sample(&mut rng);
        let positive: Vec<usize> = labels.needs().map(Need::index).collect();
        let id = format!("u{i:0width$}");
        let region_index = i % spec.regions.len();
        let gender = [Gender::Female, Gender::Male][rng.random_range(0..2)];
        let refs: Vec<String> = (0..spec.images_per_profile).map(|j| format!("img{j:02}.png")).collect();
        let (mut obj, mut scn) = (Vec::new(), Vec::new());
        for r in &refs {
            images.insert(format!("{id}/{r}"), image(spec, &positive, &mut rng));
            obj.extend(object_tags(spec, r, &positive, &mut rng)?);
            scn.extend(scene_tags(spec, r, &positive, &mut rng)?);
        }
        let caps = captions(spec, &vocabs[region_index], &refs, &positive, &mut rng);
        profiles.push(ProfileRecord {
            id,
            region: spec.regions[region_index].clone(),
            gender,
            image_refs: refs,
            captions: caps,
            labels,
        });
        objects.push(obj);
        scenes.push(scn);
        classes.push(class);
    }
    let truth = GroundTruth { seed, spec: spec.clone(), correlation: model.correlation(), label_model: model, classes };
    Ok(SynthData { dataset: Dataset::new(profiles)?, images, objects, scenes, truth })
}

impl SynthData {
    /// Writes the dataset layout plus `truth.json` and `labels.csv` at the root.
    pub fn write(&self, root: &Path) -> Result<()> {
        save_dataset(&self.dataset, root)?;
        for (i, p) in self.dataset.profiles().iter().enumerate() {
            for r in &p.image_refs {
                let path = image_path(root, &p.id, r);
                needscope_core::imageio::save_png(&path, &self.images[&format!("{}/{r}", p.id)])?;
            }
            write_tag_file(&tags_path(root, &p.id, TagSource::Objects.file_name()), &self.objects[i])?;
            write_tag_file(&tags_path(root, &p.id, TagSource::Scenes.file_name()), &self.scenes[i])?;
        }
        let truth = serde_json::to_string_pretty(&self.truth).map_err(|source| HarnessError::Json { path: root.join("truth.json"), source })?;
        fs::write(root.join("truth.json"), truth).map_err(|e| HarnessError::io(root.join("truth.json"), e))?;
        crate::featfile::write_labels(&root.join("labels.csv"), &self.dataset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_probabilities_sum_to_one_without_empty_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = LabelModel::random(4, &mut rng);
        let p = m.set_probabilities();
        assert_eq!(p[0], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let c = m.correlation();
        for a in 0..L {
            assert!((c[a][a] - 1.0).abs() < 1e-12);
            for b in 0..L {
                assert!((c[a][b] - c[b][a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn infeasible_specs() {
        for spec in [SynthSpec { n: 0, ..Default::default() }, SynthSpec { classes: 0, ..Default::default() }, SynthSpec { signal: 1.5, ..Default::default() }] {
            assert!(matches!(generate(&spec, 0), Err(HarnessError::Config(_))));
        }
    }
}
