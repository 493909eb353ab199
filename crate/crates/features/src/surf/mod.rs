//! SURF interest points and 64-d descriptors.
//!
//! Detection builds determinant-of-Hessian response maps from box filters on
//! an integral image (9x9 base filter at σ = 1.2, growing in steps of 6),
//! keeps strict 3x3x3 scale-space maxima above a threshold and refines them
//! with a quadratic fit. Descriptors are oriented by default; set
//! [`SurfParams::upright`] to skip orientation assignment.

mod descriptor;
mod detect;
pub mod dump;
mod hessian;
mod integral;
pub mod render;

use serde::{Deserialize, Serialize};

pub use descriptor::{assign_orientation, compute_descriptor, window_radius, SurfDescriptor, DESCRIPTOR_LEN};
pub use detect::{detect_keypoints, filter_sizes, fits_descriptor_window, octave_filter_size};
pub use hessian::{filter_sigma, hessian_response, is_valid_filter_size, snap_filter_size, ResponseMap, BASE_FILTER, DXY_WEIGHT};
pub use integral::{integral_image, GrayMatrix, IntegralImage};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Gaussian scale σ (≥ 1.2).
    pub scale: f64,
    pub response: f64,
    /// Radians in `[0, 2π)`; 0 for upright keypoints.
    pub orientation: f64,
    /// Sign of the Hessian trace; bright blobs on dark ground are negative.
    pub laplacian_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfParams {
    pub octaves: usize,
    pub threshold: f64,
    pub keep_fraction: f64,
    /// Extra coarse box-filter widths, snapped to the nearest valid size.
    pub block_widths: Vec<usize>,
    pub upright: bool,
}

impl Default for SurfParams {
    fn default() -> Self {
        SurfParams { octaves: 3, threshold: 4e-4, keep_fraction: 0.8, block_widths: vec![32, 64, 96, 128], upright: false }
    }
}

/// Detects keypoints and describes each one. Keypoints whose window has no
/// gradient energy are skipped.
pub fn extract(img: &GrayMatrix, params: &SurfParams) -> Result<Vec<(Keypoint, SurfDescriptor)>> {
    let ii = integral_image(img);
    let keypoints = detect_keypoints(&ii, params)?;
    let mut out = Vec::with_capacity(keypoints.len());
    for kp in keypoints {
        match compute_descriptor(&ii, &kp) {
            Ok(d) => out.push((kp, d)),
            Err(crate::FeatureError::FlatWindow) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
