use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{shape, GlocalError, Result};
use crate::model::{GlocalModel, GlocalParams, TrainingData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    U,
    V,
    W,
    Z(usize),
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::U => f.write_str("U"),
            Block::V => f.write_str("V"),
            Block::W => f.write_str("W"),
            Block::Z(m) => write!(f, "Z[{m}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    /// `‖J∘(Y − UV)‖²`
    pub fit: f64,
    /// `λ1 ‖V − WᵀX‖²`
    pub latent: f64,
    /// `Σ_m λ3 n_m/n · tr(F₀ᵀ Z_m Z_mᵀ F₀)`
    pub global: f64,
    /// `λ4 Σ_m tr(F_mᵀ Z_m Z_mᵀ F_m)`
    pub local: f64,
    /// `λ2 (‖U‖² + ‖V‖² + ‖W‖²)`
    pub regularizer: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.fit + self.latent + self.global + self.local + self.regularizer
    }
}

/// Everything the objective needs, with `P = WᵀX` precomputed so line
/// searches over `W` only pay for a k × n update.
pub(crate) struct State<'a> {
    pub u: &'a DMatrix<f64>,
    pub v: &'a DMatrix<f64>,
    pub p: &'a DMatrix<f64>,
    pub w_sq: f64,
    pub z: &'a [DMatrix<f64>],
}

pub(crate) fn group_weights(groups: &[usize], g: usize, lambda3: f64) -> Vec<f64> {
    let mut sizes = vec![0.0; g];
    for &m in groups {
        sizes[m] += 1.0;
    }
    let n = groups.len().max(1) as f64;
    sizes.into_iter().map(|s| lambda3 * s / n).collect()
}

pub(crate) fn evaluate(s: &State, data: &TrainingData, groups: &[usize], params: &GlocalParams) -> ObjectiveTerms {
    let residual = (&data.y - s.u * s.v).component_mul(&data.mask);
    let f0 = s.u * s.p;
    let weights = group_weights(groups, s.z.len(), params.lambda3);
    let global: f64 = s.z.iter().zip(&weights).map(|(z, a)| a * (z.transpose() * &f0).norm_squared()).sum();
    let local: f64 = groups
        .iter()
        .enumerate()
        .map(|(i, &m)| (s.z[m].transpose() * f0.column(i)).norm_squared())
        .sum::<f64>()
        * params.lambda4;
    ObjectiveTerms {
        fit: residual.norm_squared(),
        latent: params.lambda1 * (s.v - s.p).norm_squared(),
        global,
        local,
        regularizer: params.lambda2 * (s.u.norm_squared() + s.v.norm_squared() + s.w_sq),
    }
}

/// `∂/∂F₀` of the correlation terms: column i is `2 M_i F₀[:, i]` with
/// `M_i = Σ_m a_m Z_m Z_mᵀ + λ4 Z_{m(i)} Z_{m(i)}ᵀ`.
fn correlation_gradient(f0: &DMatrix<f64>, z: &[DMatrix<f64>], groups: &[usize], params: &GlocalParams) -> DMatrix<f64> {
    let labels = f0.nrows();
    let weights = group_weights(groups, z.len(), params.lambda3);
    let outer: Vec<DMatrix<f64>> = z.iter().map(|z| z * z.transpose()).collect();
    let mut shared = DMatrix::zeros(labels, labels);
    for (t, a) in outer.iter().zip(&weights) {
        shared += t * *a;
    }
    let mut g = &shared * f0;
    if params.lambda4 != 0.0 {
        for (i, &m) in groups.iter().enumerate() {
            let extra = &outer[m] * f0.column(i) * params.lambda4;
            let mut col = g.column_mut(i);
            col += extra;
        }
    }
    g * 2.0
}

pub(crate) fn block_gradient(s: &State, data: &TrainingData, groups: &[usize], params: &GlocalParams, block: Block) -> DMatrix<f64> {
    let r = (s.u * s.v - &data.y).component_mul(&data.mask).component_mul(&data.mask);
    match block {
        Block::V => (s.u.transpose() * &r) * 2.0 + (s.v - s.p) * (2.0 * params.lambda1) + s.v * (2.0 * params.lambda2),
        Block::U => {
            let g = correlation_gradient(&(s.u * s.p), s.z, groups, params);
            (&r * s.v.transpose()) * 2.0 + g * s.p.transpose() + s.u * (2.0 * params.lambda2)
        }
        Block::W => unreachable!("W gradient needs X and W; see w_gradient"),
        Block::Z(m) => {
            let f0 = s.u * s.p;
            let a = group_weights(groups, s.z.len(), params.lambda3)[m];
            let members: Vec<usize> = (0..groups.len()).filter(|&i| groups[i] == m).collect();
            let fm = f0.select_columns(&members);
            let zm = &s.z[m];
            (&f0 * (f0.transpose() * zm)) * (2.0 * a) + (&fm * (fm.transpose() * zm)) * (2.0 * params.lambda4)
        }
    }
}

pub(crate) fn w_gradient(s: &State, w: &DMatrix<f64>, data: &TrainingData, groups: &[usize], params: &GlocalParams) -> DMatrix<f64> {
    let g = correlation_gradient(&(s.u * s.p), s.z, groups, params);
    let e = s.v - s.p;
    let inner = g.transpose() * s.u - e.transpose() * (2.0 * params.lambda1);
    &data.x * inner + w * (2.0 * params.lambda2)
}

pub(crate) fn check_shapes(model: &GlocalModel, data: &TrainingData) -> Result<()> {
    let (labels, n, d, k) = (data.labels(), data.len(), data.dim(), model.latent_dim());
    if model.u.shape() != (labels, k) {
        return Err(shape("U", (labels, k), model.u.shape()));
    }
    if model.v.shape() != (k, n) {
        return Err(shape("V", (k, n), model.v.shape()));
    }
    if model.w.shape() != (d, k) {
        return Err(shape("W", (d, k), model.w.shape()));
    }
    if model.groups.len() != n {
        return Err(shape("group assignment", (n, 1), (model.groups.len(), 1)));
    }
    if let Some(&m) = model.groups.iter().find(|&&m| m >= model.z.len()) {
        return Err(GlocalError::UnknownBlock { block: "groups".into(), group: m, groups: model.z.len() });
    }
    for z in &model.z {
        if z.shape() != (labels, k) {
            return Err(shape("Z", (labels, k), z.shape()));
        }
    }
    Ok(())
}

pub(crate) fn state<'a>(model: &'a GlocalModel, p: &'a DMatrix<f64>) -> State<'a> {
    State { u: &model.u, v: &model.v, p, w_sq: model.w.norm_squared(), z: &model.z }
}

pub fn objective(model: &GlocalModel, data: &TrainingData) -> Result<ObjectiveTerms> {
    check_shapes(model, data)?;
    let p = model.w.transpose() * &data.x;
    Ok(evaluate(&state(model, &p), data, &model.groups, &model.params))
}

/// Gradient of the full objective with respect to one block, others fixed.
/// For `Z_m` this ignores the unit-row constraint.
pub fn gradient(model: &GlocalModel, data: &TrainingData, block: Block) -> Result<DMatrix<f64>> {
    check_shapes(model, data)?;
    if let Block::Z(m) = block {
        if m >= model.z.len() {
            return Err(GlocalError::UnknownBlock { block: block.to_string(), group: m, groups: model.z.len() });
        }
    }
    let p = model.w.transpose() * &data.x;
    let s = state(model, &p);
    Ok(match block {
        Block::W => w_gradient(&s, &model.w, data, &model.groups, &model.params),
        other => block_gradient(&s, data, &model.groups, &model.params, other),
    })
}
