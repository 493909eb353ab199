use std::f64::consts::PI;

use super::descriptor::{assign_orientation, window_radius};
use super::hessian::{filter_sigma, hessian_response, snap_filter_size, ResponseMap};
use super::integral::IntegralImage;
use super::{Keypoint, SurfParams};
use crate::error::{FeatureError, Result};

/// Filter side `s` of interval `i` in octave `o` (both 0-based): 9, 15, 21, 27
/// for the first octave, then doubling steps.
pub fn octave_filter_size(octave: usize, interval: usize) -> usize {
    3 * ((1 << (octave + 1)) * (interval + 1) + 1)
}

/// Sorted distinct filter sides used for the scale stack, restricted to
/// filters that fit in a `width x height` image.
pub fn filter_sizes(params: &SurfParams, width: usize, height: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = (0..params.octaves)
        .flat_map(|o| (0..4).map(move |i| octave_filter_size(o, i)))
        .chain(params.block_widths.iter().map(|&w| snap_filter_size(w)))
        .filter(|&s| s <= width.min(height))
        .collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
}

fn is_strict_maximum(maps: &[ResponseMap], layer: usize, r: usize, c: usize) -> bool {
    let v = maps[layer].get(r, c);
    for m in &maps[layer - 1..=layer + 1] {
        for rr in r - 1..=r + 1 {
            for cc in c - 1..=c + 1 {
                if std::ptr::eq(m, &maps[layer]) && rr == r && cc == c {
                    continue;
                }
                if m.get(rr, cc) >= v {
                    return false;
                }
            }
        }
    }
    true
}

/// Solves the 3x3 system `h · x = g` by Cramer's rule; `None` if singular.
fn solve3(h: [[f64; 3]; 3], g: [f64; 3]) -> Option<[f64; 3]> {
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(h);
    if d.abs() < 1e-300 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = h;
        for row in 0..3 {
            m[row][k] = g[row];
        }
        *o = det3(m) / d;
    }
    Some(out)
}

/// Quadratic fit of the response around a discrete maximum; returns the
/// clamped offset `(dx, dy, dlayer)`, each in `[-0.5, 0.5]`.
fn interpolate(maps: &[ResponseMap], layer: usize, r: usize, c: usize) -> [f64; 3] {
    let (b, m, t) = (&maps[layer - 1], &maps[layer], &maps[layer + 1]);
    let v = m.get(r, c);
    let dx = (m.get(r, c + 1) - m.get(r, c - 1)) / 2.0;
    let dy = (m.get(r + 1, c) - m.get(r - 1, c)) / 2.0;
    let ds = (t.get(r, c) - b.get(r, c)) / 2.0;
    let dxx = m.get(r, c + 1) + m.get(r, c - 1) - 2.0 * v;
    let dyy = m.get(r + 1, c) + m.get(r - 1, c) - 2.0 * v;
    let dss = t.get(r, c) + b.get(r, c) - 2.0 * v;
    let dxy = (m.get(r + 1, c + 1) - m.get(r + 1, c - 1) - m.get(r - 1, c + 1) + m.get(r - 1, c - 1)) / 4.0;
    let dxs = (t.get(r, c + 1) - t.get(r, c - 1) - b.get(r, c + 1) + b.get(r, c - 1)) / 4.0;
    let dys = (t.get(r + 1, c) - t.get(r - 1, c) - b.get(r + 1, c) + b.get(r - 1, c)) / 4.0;
    let h = [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]];
    match solve3(h, [dx, dy, ds]) {
        Some(x) => x.map(|o| (-o).clamp(-0.5, 0.5)),
        None => [0.0; 3],
    }
}

fn interpolated_size(sizes: &[usize], layer: usize, offset: f64) -> f64 {
    let here = sizes[layer] as f64;
    if offset >= 0.0 {
        here + offset * (sizes[layer + 1] as f64 - here)
    } else {
        here + offset * (here - sizes[layer - 1] as f64)
    }
}

/// Whether the descriptor footprint of a keypoint fits inside the image.
pub fn fits_descriptor_window(ii: &IntegralImage, x: f64, y: f64, scale: f64) -> bool {
    let margin = window_radius(scale);
    x - margin >= 0.0 && y - margin >= 0.0 && x + margin <= (ii.width() - 1) as f64 && y + margin <= (ii.height() - 1) as f64
}

/// Multi-scale determinant-of-Hessian detection.
///
/// Candidates are strict maxima over their 3x3x3 scale-space neighbourhood
/// above `threshold`, refined to sub-pixel/sub-scale position. Keypoints
/// whose descriptor window leaves the image are dropped, the rest sorted by
/// response (descending) and the strongest `ceil(keep_fraction · n)` kept.
pub fn detect_keypoints(ii: &IntegralImage, params: &SurfParams) -> Result<Vec<Keypoint>> {
    if !(params.keep_fraction > 0.0 && params.keep_fraction <= 1.0) {
        return Err(FeatureError::BadKeepFraction(params.keep_fraction));
    }
    let sizes = filter_sizes(params, ii.width(), ii.height());
    if sizes.len() < 3 {
        return Ok(Vec::new());
    }
    let maps = sizes.iter().map(|&s| hessian_response(ii, s)).collect::<Result<Vec<_>>>()?;

    let mut keypoints = Vec::new();
    for layer in 1..maps.len() - 1 {
        let (w, h) = (ii.width(), ii.height());
        // the largest filter of the triple bounds the usable region
        let border = maps[layer + 1].border().max(1);
        if 2 * border >= w.min(h) {
            continue;
        }
        for r in border..h - border {
            for c in border..w - border {
                let v = maps[layer].get(r, c);
                if v <= params.threshold || !is_strict_maximum(&maps, layer, r, c) {
                    continue;
                }
                let [ox, oy, os] = interpolate(&maps, layer, r, c);
                let x = c as f64 + ox;
                let y = r as f64 + oy;
                let scale = filter_sigma(interpolated_size(&sizes, layer, os));
                if !fits_descriptor_window(ii, x, y, scale) {
                    continue;
                }
                keypoints.push(Keypoint {
                    x,
                    y,
                    scale,
                    response: v,
                    orientation: 0.0,
                    laplacian_positive: maps[layer].laplacian_positive(r, c),
                });
            }
        }
    }

    keypoints.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
            .then(a.scale.total_cmp(&b.scale))
    });
    let keep = ((params.keep_fraction * keypoints.len() as f64) - 1e-9).ceil() as usize;
    keypoints.truncate(keep);
    if !params.upright {
        for kp in &mut keypoints {
            kp.orientation = assign_orientation(ii, kp.x, kp.y, kp.scale);
            debug_assert!((0.0..2.0 * PI).contains(&kp.orientation));
        }
    }
    Ok(keypoints)
}
