use nalgebra::DMatrix;

use crate::error::{GlocalError, Result};
use crate::model::{init_model, project_rows, GlocalModel, GlocalParams, TrainingData};
use crate::objective::{block_gradient, check_shapes, evaluate, w_gradient, Block, State};

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
const MAX_Z_HALVINGS: usize = 20;

/// Initializes with [`init_model`] and runs [`train_from`].
pub fn train(data: &TrainingData, params: &GlocalParams) -> Result<GlocalModel> {
    let model = init_model(data, params)?;
    train_from(model, data)
}

struct Steps {
    u: f64,
    v: f64,
    w: f64,
    z: Vec<f64>,
}

/// Armijo backtracking along `-grad`. Returns the accepted step and the new
/// objective, or `None` when no step decreases it enough.
fn line_search(f0: f64, grad_sq: f64, start: f64, mut eval: impl FnMut(f64) -> f64) -> Option<(f64, f64)> {
    if grad_sq == 0.0 {
        return None;
    }
    let mut t = start;
    for _ in 0..MAX_BACKTRACK {
        let f = eval(t);
        if f.is_finite() && f <= f0 - ARMIJO_C * t * grad_sq {
            return Some((t, f));
        }
        t *= 0.5;
    }
    None
}

fn finite(m: &DMatrix<f64>, sweep: usize, block: Block) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GlocalError::NonFinite { sweep, block: block.to_string() })
    }
}

/// Block-coordinate descent over V, U, W and each Z_m until the relative
/// objective decrease over a sweep drops below `tol` or `max_sweeps` runs out.
pub fn train_from(mut model: GlocalModel, data: &TrainingData) -> Result<GlocalModel> {
    check_shapes(&model, data)?;
    let params = model.params.clone();
    let groups = model.groups.clone();
    let mut p = model.w.transpose() * &data.x;
    let mut w_sq = model.w.norm_squared();
    let mut f = evaluate(&State { u: &model.u, v: &model.v, p: &p, w_sq, z: &model.z }, data, &groups, &params).total();
    model.trace = vec![f];
    let mut steps = Steps { u: 1.0, v: 1.0, w: 1.0, z: vec![1.0; model.z.len()] };

    for sweep in 1..=params.max_sweeps {
        let start = f;

        // V
        let g = block_gradient(&State { u: &model.u, v: &model.v, p: &p, w_sq, z: &model.z }, data, &groups, &params, Block::V);
        finite(&g, sweep, Block::V)?;
        let accepted = line_search(f, g.norm_squared(), steps.v * 2.0, |t| {
            let v = &model.v - &g * t;
            evaluate(&State { u: &model.u, v: &v, p: &p, w_sq, z: &model.z }, data, &groups, &params).total()
        });
        if let Some((t, fnew)) = accepted {
            model.v -= &g * t;
            steps.v = t;
            f = fnew;
        }

        // U
        let g = block_gradient(&State { u: &model.u, v: &model.v, p: &p, w_sq, z: &model.z }, data, &groups, &params, Block::U);
        finite(&g, sweep, Block::U)?;
        let accepted = line_search(f, g.norm_squared(), steps.u * 2.0, |t| {
            let u = &model.u - &g * t;
            evaluate(&State { u: &u, v: &model.v, p: &p, w_sq, z: &model.z }, data, &groups, &params).total()
        });
        if let Some((t, fnew)) = accepted {
            model.u -= &g * t;
            steps.u = t;
            f = fnew;
        }

        // W, with P(t) = P − t GᵀX and ‖W − tG‖² expanded
        let g = w_gradient(&State { u: &model.u, v: &model.v, p: &p, w_sq, z: &model.z }, &model.w, data, &groups, &params);
        finite(&g, sweep, Block::W)?;
        let q = g.transpose() * &data.x;
        let (wg, gg) = (model.w.dot(&g), g.norm_squared());
        let accepted = line_search(f, gg, steps.w * 2.0, |t| {
            let pt = &p - &q * t;
            let sq = w_sq - 2.0 * t * wg + t * t * gg;
            evaluate(&State { u: &model.u, v: &model.v, p: &pt, w_sq: sq, z: &model.z }, data, &groups, &params).total()
        });
        if let Some((t, _)) = accepted {
            model.w -= &g * t;
            steps.w = t;
            p = model.w.transpose() * &data.x;
            w_sq = model.w.norm_squared();
            // fresh evaluation, so the trace matches objective() to rounding
            f = evaluate(&State { u: &model.u, v: &model.v, p: &p, w_sq, z: &model.z }, data, &groups, &params).total();
        }

        // Z_m: projected step, halved until the objective does not increase
        for m in 0..model.z.len() {
            let s = State { u: &model.u, v: &model.v, p: &p, w_sq, z: &model.z };
            let g = block_gradient(&s, data, &groups, &params, Block::Z(m));
            finite(&g, sweep, Block::Z(m))?;
            if g.norm_squared() == 0.0 {
                continue;
            }
            let mut t = steps.z[m] * 2.0;
            for _ in 0..=MAX_Z_HALVINGS {
                let mut z = model.z.clone();
                z[m] = project_rows(&model.z[m] - &g * t, &model.z[m]);
                let fnew = evaluate(&State { u: &model.u, v: &model.v, p: &p, w_sq, z: &z }, data, &groups, &params).total();
                if fnew <= f {
                    model.z = z;
                    steps.z[m] = t;
                    f = fnew;
                    break;
                }
                t *= 0.5;
            }
        }

        for (block, m) in [(Block::U, &model.u), (Block::V, &model.v), (Block::W, &model.w)] {
            finite(m, sweep, block)?;
        }
        model.trace.push(f);
        model.sweeps = sweep;
        let decrease = (start - f) / start.abs().max(f64::MIN_POSITIVE);
        if decrease < params.tol {
            model.converged = true;
            break;
        }
    }
    Ok(model)
}
