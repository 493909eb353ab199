use std::f64::consts::{FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use super::integral::IntegralImage;
use super::Keypoint;
use crate::error::{FeatureError, Result};

pub const DESCRIPTOR_LEN: usize = 64;

/// Unit-norm 64-vector: per 4x4 sub-region (Σdx, Σdy, Σ|dx|, Σ|dy|) of
/// Haar responses expressed in the keypoint's rotated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfDescriptor(pub Vec<f64>);

impl SurfDescriptor {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn cosine(&self, other: &SurfDescriptor) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

impl AsRef<[f64]> for SurfDescriptor {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Pixel radius beyond which neither the oriented descriptor window nor the
/// orientation neighbourhood samples the image.
pub fn window_radius(scale: f64) -> f64 {
    // farthest sample at 9.5σ·√2, plus rounding and half a Haar side
    14.5 * scale + 2.0
}

fn haar_side(sigma_multiple: f64) -> i64 {
    (2.0 * sigma_multiple.round()).max(2.0) as i64
}

fn wrap_angle(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

/// Dominant gradient direction in `[0, 2π)` from Gaussian-weighted Haar
/// responses (side 4σ) sampled within radius 6σ, using a sliding π/3 window.
pub fn assign_orientation(ii: &IntegralImage, x: f64, y: f64, scale: f64) -> f64 {
    let side = haar_side(2.0 * scale);
    let mut samples = Vec::with_capacity(113);
    for j in -6i32..=6 {
        for i in -6i32..=6 {
            if i * i + j * j >= 36 {
                continue;
            }
            let g = (-((i * i + j * j) as f64) / (2.0 * 2.5 * 2.5)).exp();
            let row = (y + j as f64 * scale).round() as i64;
            let col = (x + i as f64 * scale).round() as i64;
            let dx = g * ii.haar_x(row, col, side);
            let dy = g * ii.haar_y(row, col, side);
            if dx != 0.0 || dy != 0.0 {
                samples.push((wrap_angle(dy.atan2(dx)), dx, dy));
            }
        }
    }
    let mut best = (0.0, 0.0);
    let mut best_norm = 0.0;
    let mut start = 0.0;
    while start < 2.0 * PI {
        let end = start + FRAC_PI_3;
        let (mut sx, mut sy) = (0.0, 0.0);
        for &(a, dx, dy) in &samples {
            let inside = if end < 2.0 * PI { a >= start && a < end } else { a >= start || a < end - 2.0 * PI };
            if inside {
                sx += dx;
                sy += dy;
            }
        }
        let norm = sx * sx + sy * sy;
        if norm > best_norm {
            best_norm = norm;
            best = (sx, sy);
        }
        start += 0.15;
    }
    if best_norm == 0.0 {
        0.0
    } else {
        wrap_angle(best.1.atan2(best.0))
    }
}

/// 64-d descriptor over a 20σ window split into 4x4 sub-regions of 5x5
/// samples, Haar side 2σ, Gaussian weight σ_w = 3.3σ.
pub fn compute_descriptor(ii: &IntegralImage, kp: &Keypoint) -> Result<SurfDescriptor> {
    let sigma = kp.scale;
    let (sin, cos) = kp.orientation.sin_cos();
    let side = haar_side(sigma);
    let half = side / 2;
    let out_of_bounds = || FeatureError::WindowOutOfBounds { x: kp.x, y: kp.y, scale: kp.scale };
    let mut values = Vec::with_capacity(DESCRIPTOR_LEN);
    for a in 0..4 {
        for b in 0..4 {
            let mut acc = [0.0f64; 4];
            for k in 0..5 {
                for l in 0..5 {
                    let u = (b * 5 + l) as f64 - 9.5;
                    let v = (a * 5 + k) as f64 - 9.5;
                    let px = kp.x + (u * cos - v * sin) * sigma;
                    let py = kp.y + (u * sin + v * cos) * sigma;
                    let (row, col) = (py.round() as i64, px.round() as i64);
                    if !ii.contains(row - half, col - half, side, side) {
                        return Err(out_of_bounds());
                    }
                    let g = (-(u * u + v * v) / (2.0 * 3.3 * 3.3)).exp();
                    let dx = ii.haar_x(row, col, side);
                    let dy = ii.haar_y(row, col, side);
                    let du = g * (dx * cos + dy * sin);
                    let dv = g * (-dx * sin + dy * cos);
                    acc[0] += du;
                    acc[1] += dv;
                    acc[2] += du.abs();
                    acc[3] += dv.abs();
                }
            }
            values.extend_from_slice(&acc);
        }
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(FeatureError::FlatWindow);
    }
    values.iter_mut().for_each(|v| *v /= norm);
    Ok(SurfDescriptor(values))
}
