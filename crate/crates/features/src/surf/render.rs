//! Synthetic test patterns.

use super::integral::GrayMatrix;

/// Renders isotropic Gaussian blobs `(x, y, sigma, amplitude)` over a
/// constant background. Amplitude is the peak offset from the background.
pub fn gaussian_blob(width: usize, height: usize, blobs: &[(f64, f64, f64, f64)], background: f64) -> GrayMatrix {
    GrayMatrix::from_fn(width, height, |r, c| {
        background
            + blobs
                .iter()
                .map(|&(x, y, s, a)| {
                    let d2 = (c as f64 - x).powi(2) + (r as f64 - y).powi(2);
                    a * (-d2 / (2.0 * s * s)).exp()
                })
                .sum::<f64>()
    })
    .expect("non-empty raster")
}

/// Anisotropic Gaussian with standard deviations `(sx, sy)` rotated by `angle`.
pub fn elongated_blob(width: usize, height: usize, centre: (f64, f64), sx: f64, sy: f64, angle: f64, amplitude: f64, background: f64) -> GrayMatrix {
    let (sin, cos) = angle.sin_cos();
    GrayMatrix::from_fn(width, height, |r, c| {
        let (dx, dy) = (c as f64 - centre.0, r as f64 - centre.1);
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        background + amplitude * (-(u * u) / (2.0 * sx * sx) - (v * v) / (2.0 * sy * sy)).exp()
    })
    .expect("non-empty raster")
}
