//! Caption tokenization, skip-gram embeddings with negative sampling, and
//! per-profile averaged text vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use needscope_core::{Dataset, FeatureSpace, FeatureVector, ProfileRecord, Region};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FeatureError, Result};

const EXTRA_PUNCTUATION: &str = "«»،؛؟…“”‘’„¡¿–—·•。、！？";

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || c.is_whitespace() || EXTRA_PUNCTUATION.contains(c)
}

fn clean(word: &str) -> Option<String> {
    let w = word.trim_matches(is_punct).to_lowercase();
    (!w.is_empty()).then_some(w)
}

/// Lowercases, splits on whitespace, strips surrounding punctuation and `#`,
/// then appends the hashtags. Persian and other scripts pass through intact.
pub fn tokenize<S: AsRef<str>>(caption: &str, hashtags: &[S]) -> Vec<String> {
    caption.split_whitespace().chain(hashtags.iter().map(AsRef::as_ref)).filter_map(clean).collect()
}

/// As [`tokenize`], dropping any token in `stop_words`.
pub fn tokenize_filtered<S: AsRef<str>>(caption: &str, hashtags: &[S], stop_words: &BTreeSet<String>) -> Vec<String> {
    tokenize(caption, hashtags).into_iter().filter(|t| !stop_words.contains(t)).collect()
}

/// All tokens of a profile's captions, in caption order.
pub fn profile_tokens(profile: &ProfileRecord) -> Vec<String> {
    profile.captions.iter().flat_map(|c| tokenize(&c.caption, &c.hashtags)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipGramParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Number of (center, context) pairs, strided over the corpus, used for
    /// the per-epoch loss trace. A subset keeps the trace cheap on large
    /// corpora but makes it noisy once training plateaus; `usize::MAX`
    /// measures every pair.
    pub loss_pairs: usize,
}

impl Default for SkipGramParams {
    fn default() -> Self {
        SkipGramParams {
            dim: 128,
            window: 5,
            negatives: 5,
            epochs: 15,
            min_count: 2,
            learning_rate: 0.025,
            seed: 0,
            loss_pairs: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub params: SkipGramParams,
    vocabulary: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    /// Expected negative-sampling loss before training and after each epoch.
    pub loss_trace: Vec<f64>,
}

impl EmbeddingTable {
    fn from_parts(params: SkipGramParams, vocabulary: Vec<String>, vectors: Vec<f64>, loss_trace: Vec<f64>) -> Self {
        let index = vocabulary.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        EmbeddingTable { params, vocabulary, index, vectors, loss_trace }
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.params.dim..(i + 1) * self.params.dim]
    }

    /// word2vec text layout: a `<count> <dim>` line, a `#` line holding the
    /// training config as JSON, then one `<token> <values...>` line per word.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim())?;
        let config = serde_json::to_string(&self.params).map_err(std::io::Error::other)?;
        writeln!(w, "# {config}")?;
        for (i, word) in self.vocabulary.iter().enumerate() {
            write!(w, "{word}")?;
            for v in self.row(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let bad = |m: String| FeatureError::format("embedding file", m);
        let mut lines = r.lines();
        let mut next = || lines.next().transpose().map_err(|e| bad(e.to_string()));
        let head = next()?.ok_or_else(|| bad("missing header".into()))?;
        let (n, dim) = head
            .split_once(' ')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
            .ok_or_else(|| bad(format!("bad header {head:?}")))?;
        let config = next()?.ok_or_else(|| bad("missing config line".into()))?;
        let params: SkipGramParams = serde_json::from_str(config.trim_start_matches('#').trim()).map_err(|e| bad(e.to_string()))?;
        if params.dim != dim {
            return Err(FeatureError::Dimension { expected: params.dim, actual: dim });
        }
        let mut vocabulary = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * dim);
        while let Some(line) = next()? {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default().to_string();
            let before = vectors.len();
            for p in parts {
                let v: f64 = p.parse().map_err(|_| bad(format!("bad value {p:?} for {word:?}")))?;
                if !v.is_finite() {
                    return Err(bad(format!("non-finite value for {word:?}")));
                }
                vectors.push(v);
            }
            if vectors.len() - before != dim {
                return Err(FeatureError::Dimension { expected: dim, actual: vectors.len() - before });
            }
            vocabulary.push(word);
        }
        if vocabulary.len() != n {
            return Err(bad(format!("header promises {n} words, found {}", vocabulary.len())));
        }
        Ok(EmbeddingTable::from_parts(params, vocabulary, vectors, Vec::new()))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let n = (dot(a, a) * dot(b, b)).sqrt();
    if n > 0.0 {
        dot(a, b) / n
    } else {
        0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Negative-sampling loss `-log σ(u_o·v) - Σ_j log σ(-u_j·v)` for one pair.
pub fn pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    softplus(-dot(context, center)) + negatives.iter().map(|u| softplus(dot(u, center))).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`pair_loss`] with respect to each argument.
pub fn pair_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let gp = sigmoid(dot(context, center)) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|u| gp * u).collect();
    let mut g_negs = Vec::with_capacity(negatives.len());
    for u in negatives {
        let gn = sigmoid(dot(u, center));
        for (g, x) in g_center.iter_mut().zip(u.iter()) {
            *g += gn * x;
        }
        g_negs.push(center.iter().map(|v| gn * v).collect());
    }
    PairGradient { center: g_center, context: center.iter().map(|v| gp * v).collect(), negatives: g_negs }
}

struct NoiseDistribution {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl NoiseDistribution {
    /// Unigram counts raised to 3/4.
    fn new(counts: &[usize]) -> Self {
        let w: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        let cumulative = probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        NoiseDistribution { probs, cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let x = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        self.cumulative.partition_point(|&c| c <= x).min(self.probs.len() - 1)
    }
}

fn context_pairs(sentences: &[Vec<usize>], window: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    sentences.iter().flat_map(move |s| {
        (0..s.len()).flat_map(move |i| {
            let lo = i.saturating_sub(window);
            let hi = (i + window + 1).min(s.len());
            (lo..hi).filter(move |&j| j != i).map(move |j| (s[i], s[j]))
        })
    })
}

/// Exact expectation over the noise distribution of the sampled objective,
/// averaged over `pairs`.
fn expected_loss(pairs: &[(usize, usize)], input: &[f64], output: &[f64], noise: &NoiseDistribution, dim: usize, k: usize) -> f64 {
    let row = |m: &'_ [f64], i: usize| -> Vec<f64> { m[i * dim..(i + 1) * dim].to_vec() };
    let mut total = 0.0;
    for &(c, o) in pairs {
        let v = row(input, c);
        let mut l = softplus(-dot(&output[o * dim..(o + 1) * dim], &v));
        for (w, p) in noise.probs.iter().enumerate() {
            l += k as f64 * p * softplus(dot(&output[w * dim..(w + 1) * dim], &v));
        }
        total += l;
    }
    total / pairs.len().max(1) as f64
}

/// Trains skip-gram with negative sampling on `corpus` (one token list per
/// sentence). Single-threaded, so a fixed seed gives bitwise-identical output.
pub fn train_skipgram(corpus: &[Vec<String>], params: &SkipGramParams) -> Result<EmbeddingTable> {
    if params.dim == 0 {
        return Err(FeatureError::format("skip-gram params", "dim must be positive"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in corpus.iter().flatten() {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut vocab: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= params.min_count).collect();
    if vocab.is_empty() {
        return Err(FeatureError::EmptyVocabulary);
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();
    let sentences: Vec<Vec<usize>> =
        corpus.iter().map(|s| s.iter().filter_map(|t| index.get(t.as_str()).copied()).collect()).collect();
    let noise = NoiseDistribution::new(&vocab.iter().map(|v| v.1).collect::<Vec<_>>());

    let dim = params.dim;
    let n = vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut input: Vec<f64> = (0..n * dim).map(|_| (rng.random::<f64>() - 0.5) / dim as f64).collect();
    let mut output = vec![0.0; n * dim];

    let pairs_per_epoch = context_pairs(&sentences, params.window).count();
    let stride = (pairs_per_epoch / params.loss_pairs.max(1)).max(1);
    let probe: Vec<(usize, usize)> =
        context_pairs(&sentences, params.window).step_by(stride).take(params.loss_pairs).collect();
    let total_steps = (pairs_per_epoch * params.epochs).max(1) as f64;

    let mut step = 0usize;
    let mut loss_trace = Vec::with_capacity(params.epochs + 1);
    loss_trace.push(expected_loss(&probe, &input, &output, &noise, dim, params.negatives));
    let mut grad_center = vec![0.0; dim];
    for _ in 0..params.epochs {
        for (c, o) in context_pairs(&sentences, params.window) {
            let lr = params.learning_rate * (1.0 - step as f64 / total_steps).max(1e-4);
            step += 1;
            grad_center.iter_mut().for_each(|g| *g = 0.0);
            let v = &input[c * dim..(c + 1) * dim];
            let mut update = |target: usize, label: f64, output: &mut [f64]| {
                let u = &mut output[target * dim..(target + 1) * dim];
                let g = sigmoid(dot(u, v)) - label;
                for d in 0..dim {
                    grad_center[d] += g * u[d];
                    u[d] -= lr * g * v[d];
                }
            };
            update(o, 1.0, &mut output);
            // a draw equal to the context word is kept so the updates follow
            // the sampled objective that the loss trace measures
            for _ in 0..params.negatives {
                update(noise.sample(&mut rng), 0.0, &mut output);
            }
            for (x, g) in input[c * dim..(c + 1) * dim].iter_mut().zip(&grad_center) {
                *x -= lr * g;
            }
        }
        loss_trace.push(expected_loss(&probe, &input, &output, &noise, dim, params.negatives));
    }
    let words = vocab.into_iter().map(|(w, _)| w.to_string()).collect();
    Ok(EmbeddingTable::from_parts(params.clone(), words, input, loss_trace))
}

/// One table per region, each trained only on that region's captions.
pub fn train_per_region(dataset: &Dataset, params: &SkipGramParams) -> Result<BTreeMap<Region, EmbeddingTable>> {
    let mut out = BTreeMap::new();
    for (region, members) in dataset.by_region() {
        let corpus: Vec<Vec<String>> = members
            .iter()
            .flat_map(|&i| dataset.profiles()[i].captions.iter())
            .map(|c| tokenize(&c.caption, &c.hashtags))
            .filter(|s| !s.is_empty())
            .collect();
        if corpus.is_empty() {
            return Err(FeatureError::RegionWithoutText(region.as_str().to_string()));
        }
        let table = train_skipgram(&corpus, params)?;
        log::info!("region {}: {} words, {} sentences", region.as_str(), table.len(), corpus.len());
        out.insert(region, table);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserVector {
    pub vector: FeatureVector,
    pub out_of_vocabulary: usize,
}

/// Mean embedding over in-vocabulary token occurrences.
pub fn user_vector<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> UserVector {
    let mut sum = vec![0.0; table.dim()];
    let mut hits = 0usize;
    for t in tokens {
        if let Some(v) = table.vector(t.as_ref()) {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            hits += 1;
        }
    }
    let out_of_vocabulary = tokens.len() - hits;
    let vector = if hits == 0 {
        FeatureVector::degenerate(FeatureSpace::Text, table.dim())
    } else {
        FeatureVector { space: FeatureSpace::Text, values: sum.into_iter().map(|s| s / hits as f64).collect(), degenerate: false }
    };
    UserVector { vector, out_of_vocabulary }
}
