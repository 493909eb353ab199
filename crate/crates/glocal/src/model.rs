use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use needscope_features::kmeans::{kmeans, squared_distance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{shape, GlocalError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlocalParams {
    /// Latent dimension, also the rank of every `Z_m`.
    pub k: usize,
    /// Number of instance groups.
    pub g: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub max_sweeps: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for GlocalParams {
    fn default() -> Self {
        GlocalParams { k: 4, g: 3, lambda1: 1.0, lambda2: 0.125, lambda3: 0.01, lambda4: 0.01, max_sweeps: 200, tol: 1e-6, seed: 0 }
    }
}

impl GlocalParams {
    pub fn validate(&self, labels: usize, n: usize) -> Result<()> {
        let lambdas = [self.lambda1, self.lambda2, self.lambda3, self.lambda4];
        if lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(GlocalError::InvalidParams(format!("trade-off weights must be finite and non-negative, got {lambdas:?}")));
        }
        if self.k == 0 || self.k > labels {
            return Err(GlocalError::InvalidParams(format!("k = {} outside [1, {labels}]", self.k)));
        }
        if self.g == 0 || self.g > n {
            return Err(GlocalError::InvalidParams(format!("g = {} outside [1, {n}]", self.g)));
        }
        if !(self.tol >= 0.0) {
            return Err(GlocalError::InvalidParams(format!("tol = {}", self.tol)));
        }
        Ok(())
    }
}

/// Features `X` (d × n), labels `Y` (labels × n, ±1) and observation mask `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub mask: DMatrix<f64>,
}

impl TrainingData {
    /// Fully observed labels.
    pub fn new(x: DMatrix<f64>, signs: &DMatrix<i8>) -> Result<Self> {
        let mask = DMatrix::from_element(signs.nrows(), signs.ncols(), 1.0);
        Self::with_mask(x, signs, mask)
    }

    /// `mask` holds 1 for observed entries and 0 for missing ones.
    pub fn with_mask(x: DMatrix<f64>, signs: &DMatrix<i8>, mask: DMatrix<f64>) -> Result<Self> {
        if x.ncols() != signs.ncols() {
            return Err(shape("feature columns", (x.nrows(), signs.ncols()), x.shape()));
        }
        if mask.shape() != signs.shape() {
            return Err(shape("observation mask", signs.shape(), mask.shape()));
        }
        if x.iter().chain(mask.iter()).any(|v| !v.is_finite()) {
            return Err(GlocalError::InvalidParams("non-finite feature or mask entry".into()));
        }
        let y = signs.map(|s| if s > 0 { 1.0 } else { -1.0 });
        Ok(TrainingData { x, y, mask })
    }

    pub fn labels(&self) -> usize {
        self.y.nrows()
    }

    pub fn len(&self) -> usize {
        self.y.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.y.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlocalModel {
    pub params: GlocalParams,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub z: Vec<DMatrix<f64>>,
    /// Group index of every training instance.
    pub groups: Vec<usize>,
    /// Objective after initialization and after every sweep.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl GlocalModel {
    pub fn labels(&self) -> usize {
        self.u.nrows()
    }

    pub fn latent_dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn feature_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn group_count(&self) -> usize {
        self.z.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.z.len()];
        for &m in &self.groups {
            sizes[m] += 1;
        }
        sizes
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|source| GlocalError::Json { path: path.to_path_buf(), source })?;
        fs::write(path, json).map_err(|source| GlocalError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| GlocalError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|source| GlocalError::Json { path: path.to_path_buf(), source })
    }
}

/// Clusters the columns of `x` into `g` non-empty groups with seeded
/// k-means. A group left empty takes the instance nearest its center from
/// a group that can spare one.
pub fn partition_groups(x: &DMatrix<f64>, g: usize, seed: u64) -> Result<Vec<usize>> {
    let n = x.ncols();
    if g == 0 || g > n {
        return Err(GlocalError::InvalidParams(format!("g = {g} outside [1, {n}]")));
    }
    if g == 1 {
        return Ok(vec![0; n]);
    }
    let columns: Vec<Vec<f64>> = x.column_iter().map(|c| c.iter().copied().collect()).collect();
    let fit = kmeans(&columns, g, seed, 100, 1e-9)?;
    let mut groups = fit.assignments;
    let mut sizes = vec![0usize; g];
    for &m in &groups {
        sizes[m] += 1;
    }
    for m in 0..g {
        if sizes[m] > 0 {
            continue;
        }
        let donor = (0..n)
            .filter(|&i| sizes[groups[i]] > 1)
            .min_by(|&a, &b| {
                squared_distance(&columns[a], &fit.centers[m]).total_cmp(&squared_distance(&columns[b], &fit.centers[m]))
            })
            .expect("g <= n leaves a group with a spare instance");
        sizes[groups[donor]] -= 1;
        groups[donor] = m;
        sizes[m] = 1;
    }
    Ok(groups)
}

fn normalize_rows(z: &mut DMatrix<f64>, fallback: Option<&DMatrix<f64>>) {
    for r in 0..z.nrows() {
        let norm = z.row(r).norm();
        if norm > 0.0 && norm.is_finite() {
            let scaled = z.row(r) / norm;
            z.set_row(r, &scaled);
        } else if let Some(prev) = fallback {
            z.set_row(r, &prev.row(r));
        } else {
            z.row_mut(r).fill(0.0);
            z[(r, 0)] = 1.0;
        }
    }
}

/// Row-normalizes `z`; rows that vanish keep their value from `previous`.
pub(crate) fn project_rows(mut z: DMatrix<f64>, previous: &DMatrix<f64>) -> DMatrix<f64> {
    normalize_rows(&mut z, Some(previous));
    z
}

fn solve_spd(a: DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(chol) = a.clone().cholesky() {
        return chol.solve(b);
    }
    a.lu().solve(b).unwrap_or_else(|| {
        log::warn!("singular ridge system; leaving W at zero");
        DMatrix::zeros(b.nrows(), b.ncols())
    })
}

/// Solves `min ‖V − Wᵀ X‖² + λ ‖W‖²` for `W` (d × k), in the primal when
/// `d ≤ n` and through the n × n Gram matrix otherwise.
pub(crate) fn ridge(x: &DMatrix<f64>, v: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let (d, n) = x.shape();
    if d <= n {
        let mut a = x * x.transpose();
        for i in 0..d {
            a[(i, i)] += lambda;
        }
        solve_spd(a, &(x * v.transpose()))
    } else {
        let mut a = x.transpose() * x;
        for i in 0..n {
            a[(i, i)] += lambda;
        }
        x * solve_spd(a, &v.transpose())
    }
}

/// Spectral initialization from the eigendecomposition of `Y Yᵀ`:
/// `U = U_k Σ_k^½`, `V = Σ_k^-½ U_kᵀ Y`, which equals the truncated SVD
/// factorization. `W` is the ridge fit of `V`; each `Z_m` gets random unit
/// rows. `k` shrinks to the numerical rank of `Y` when larger.
pub fn init_model(data: &TrainingData, params: &GlocalParams) -> Result<GlocalModel> {
    let (labels, n) = data.y.shape();
    params.validate(labels, n)?;
    let eig = (&data.y * data.y.transpose()).symmetric_eigen();
    let mut order: Vec<usize> = (0..labels).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]];
    let cutoff = top * labels.max(n) as f64 * 10.0 * f64::EPSILON;
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > cutoff).count();
    if rank == 0 {
        return Err(GlocalError::ZeroRank);
    }
    let k = if params.k > rank {
        log::warn!("latent dimension {} exceeds label rank {rank}; using {rank}", params.k);
        rank
    } else {
        params.k
    };
    let mut u = DMatrix::zeros(labels, k);
    let mut v = DMatrix::zeros(k, n);
    for (j, &i) in order.iter().take(k).enumerate() {
        let sigma = eig.eigenvalues[i].sqrt();
        let col = eig.eigenvectors.column(i);
        u.set_column(j, &(col * sigma.sqrt()));
        v.set_row(j, &((col.transpose() * &data.y) / sigma.sqrt()));
    }
    let w = ridge(&data.x, &v, params.lambda2);
    let groups = partition_groups(&data.x, params.g, params.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let z = (0..params.g)
        .map(|_| {
            let mut z = DMatrix::from_fn(labels, k, |_, _| StandardNormal.sample(&mut rng));
            normalize_rows(&mut z, None);
            z
        })
        .collect();
    let mut params = params.clone();
    params.k = k;
    Ok(GlocalModel { params, u, v, w, z, groups, trace: Vec::new(), sweeps: 0, converged: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    /// Scores `U Wᵀ X`, labels × instances.
    pub scores: DMatrix<f64>,
    /// +1 where the score is strictly positive; a column with no positive
    /// score gets +1 at its highest-scoring label (lowest index on ties).
    pub signs: DMatrix<i8>,
}

pub fn predict(model: &GlocalModel, x: &DMatrix<f64>) -> Result<Predictions> {
    if x.nrows() != model.feature_dim() {
        return Err(shape("prediction features", (model.feature_dim(), x.ncols()), x.shape()));
    }
    let scores = &model.u * (model.w.transpose() * x);
    Ok(Predictions { signs: threshold(&scores), scores })
}

pub(crate) fn threshold(scores: &DMatrix<f64>) -> DMatrix<i8> {
    let mut signs = scores.map(|s| if s > 0.0 { 1i8 } else { -1 });
    for (j, col) in scores.column_iter().enumerate() {
        if signs.column(j).iter().all(|&s| s < 0) && !col.is_empty() {
            let mut best = 0;
            for i in 1..col.len() {
                if col[i] > col[best] {
                    best = i;
                }
            }
            signs[(best, j)] = 1;
        }
    }
    signs
}
