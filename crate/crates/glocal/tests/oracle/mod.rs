//! Independent reference computations for the GLOCAL objective: plain loops
//! over entries, and central finite differences.

#![allow(dead_code)]

use nalgebra::DMatrix;
use needscope_glocal::{Block, GlocalModel, GlocalParams, TrainingData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct OracleTerms {
    pub fit: f64,
    pub latent: f64,
    pub global: f64,
    pub local: f64,
    pub regularizer: f64,
}

impl OracleTerms {
    pub fn total(&self) -> f64 {
        self.fit + self.latent + self.global + self.local + self.regularizer
    }
}

fn sq_sum(m: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            s += m[(i, j)] * m[(i, j)];
        }
    }
    s
}

/// Quadratic form `fᵀ Z Zᵀ f` summed as `Σ_r (Σ_l f_l Z_lr)²`.
fn zz_form(z: &DMatrix<f64>, f: &[f64]) -> f64 {
    let mut total = 0.0;
    for r in 0..z.ncols() {
        let mut proj = 0.0;
        for l in 0..z.nrows() {
            proj += f[l] * z[(l, r)];
        }
        total += proj * proj;
    }
    total
}

pub fn objective_terms(model: &GlocalModel, data: &TrainingData) -> OracleTerms {
    let p = &model.params;
    let (labels, n, d, k) = (data.y.nrows(), data.y.ncols(), data.x.nrows(), model.u.ncols());
    let mut fit = 0.0;
    let mut latent = 0.0;
    let mut f0 = vec![vec![0.0; labels]; n];
    for j in 0..n {
        let mut wx = vec![0.0; k];
        for a in 0..k {
            for t in 0..d {
                wx[a] += model.w[(t, a)] * data.x[(t, j)];
            }
            let e = model.v[(a, j)] - wx[a];
            latent += e * e;
        }
        for l in 0..labels {
            let mut uv = 0.0;
            for a in 0..k {
                uv += model.u[(l, a)] * model.v[(a, j)];
                f0[j][l] += model.u[(l, a)] * wx[a];
            }
            let r = data.mask[(l, j)] * (data.y[(l, j)] - uv);
            fit += r * r;
        }
    }
    let g = model.z.len();
    let mut sizes = vec![0usize; g];
    for &m in &model.groups {
        sizes[m] += 1;
    }
    let mut global = 0.0;
    for m in 0..g {
        let weight = p.lambda3 * sizes[m] as f64 / n as f64;
        for col in &f0 {
            global += weight * zz_form(&model.z[m], col);
        }
    }
    let mut local = 0.0;
    for (j, col) in f0.iter().enumerate() {
        local += p.lambda4 * zz_form(&model.z[model.groups[j]], col);
    }
    let regularizer = p.lambda2 * (sq_sum(&model.u) + sq_sum(&model.v) + sq_sum(&model.w));
    OracleTerms { fit, latent: p.lambda1 * latent, global, local, regularizer }
}

pub fn objective(model: &GlocalModel, data: &TrainingData) -> f64 {
    objective_terms(model, data).total()
}

fn block_mut(model: &mut GlocalModel, block: Block) -> &mut DMatrix<f64> {
    match block {
        Block::U => &mut model.u,
        Block::V => &mut model.v,
        Block::W => &mut model.w,
        Block::Z(m) => &mut model.z[m],
    }
}

/// Central differences of the oracle objective, step `h` per entry.
pub fn fd_gradient(model: &GlocalModel, data: &TrainingData, block: Block, h: f64) -> DMatrix<f64> {
    let mut probe = model.clone();
    let (rows, cols) = block_mut(&mut probe, block).shape();
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let orig = block_mut(&mut probe, block)[(i, j)];
            block_mut(&mut probe, block)[(i, j)] = orig + h;
            let up = objective(&probe, data);
            block_mut(&mut probe, block)[(i, j)] = orig - h;
            let down = objective(&probe, data);
            block_mut(&mut probe, block)[(i, j)] = orig;
            out[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    out
}

pub fn relative_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the oracle free of the crate's own sampling code
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random model and data of the given shape with every group non-empty
/// and all trade-off weights drawn from [0.1, 1].
pub fn random_instance(seed: u64, labels: usize, n: usize, d: usize, k: usize, g: usize) -> (GlocalModel, TrainingData) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(d, n, |_, _| normal(&mut rng));
    let signs = DMatrix::from_fn(labels, n, |_, _| if rng.random_bool(0.4) { 1i8 } else { -1 });
    let data = TrainingData::new(x, &signs).unwrap();
    let mut lambda = || rng.random_range(0.1..1.0);
    let params = GlocalParams { k, g, lambda1: lambda(), lambda2: lambda(), lambda3: lambda(), lambda4: lambda(), max_sweeps: 10, tol: 0.0, seed };
    let u = DMatrix::from_fn(labels, k, |_, _| normal(&mut rng));
    let v = DMatrix::from_fn(k, n, |_, _| normal(&mut rng));
    let w = DMatrix::from_fn(d, k, |_, _| normal(&mut rng) * 0.3);
    let z = (0..g)
        .map(|_| {
            let mut z = DMatrix::from_fn(labels, k, |_, _| normal(&mut rng));
            for r in 0..labels {
                let norm = z.row(r).norm();
                for c in 0..k {
                    z[(r, c)] /= norm;
                }
            }
            z
        })
        .collect();
    let groups = (0..n).map(|i| if i < g { i } else { rng.random_range(0..g) }).collect();
    let model = GlocalModel { params, u, v, w, z, groups, trace: vec![], sweeps: 0, converged: false };
    (model, data)
}

/// Blocks of a model with `g` groups.
pub fn blocks(g: usize) -> Vec<Block> {
    let mut b = vec![Block::U, Block::V, Block::W];
    b.extend((0..g).map(Block::Z));
    b
}
