use super::integral::IntegralImage;
use crate::error::{FeatureError, Result};

/// Relative weight of the mixed derivative box filter.
pub const DXY_WEIGHT: f64 = 0.9;

/// Base filter side; approximates Gaussian second derivatives at σ = 1.2.
pub const BASE_FILTER: usize = 9;

pub fn is_valid_filter_size(size: usize) -> bool {
    size >= BASE_FILTER && (size - BASE_FILTER).is_multiple_of(6)
}

/// Scale σ represented by a box filter of the given side.
pub fn filter_sigma(size: f64) -> f64 {
    1.2 * size / BASE_FILTER as f64
}

/// Nearest valid box filter side to an arbitrary block width.
pub fn snap_filter_size(width: usize) -> usize {
    let k = ((width as f64 - BASE_FILTER as f64) / 6.0).round().max(0.0) as usize;
    BASE_FILTER + 6 * k
}

/// Approximate det(H) per pixel for one box-filter size.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub filter_size: usize,
    pub width: usize,
    pub height: usize,
    values: Vec<f64>,
    laplacian_positive: Vec<bool>,
}

impl ResponseMap {
    /// Half filter side: pixels closer than this to the border have response 0.
    pub fn border(&self) -> usize {
        (self.filter_size - 1) / 2
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn laplacian_positive(&self, row: usize, col: usize) -> bool {
        self.laplacian_positive[row * self.width + col]
    }

    /// Whether the full filter fits at `(row, col)`.
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        let b = self.border();
        row >= b && col >= b && row + b < self.height && col + b < self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Box-filter second derivatives at `(r, c)`, each normalized by the filter area.
fn derivatives(ii: &IntegralImage, r: i64, c: i64, size: i64) -> (f64, f64, f64) {
    let lobe = size / 3;
    let b = (size - 1) / 2;
    let inv_area = 1.0 / (size * size) as f64;
    let dxx = ii.area(r - lobe + 1, c - b, 2 * lobe - 1, size) - 3.0 * ii.area(r - lobe + 1, c - lobe / 2, 2 * lobe - 1, lobe);
    let dyy = ii.area(r - b, c - lobe + 1, size, 2 * lobe - 1) - 3.0 * ii.area(r - lobe / 2, c - lobe + 1, lobe, 2 * lobe - 1);
    let dxy = ii.area(r - lobe, c + 1, lobe, lobe) + ii.area(r + 1, c - lobe, lobe, lobe)
        - ii.area(r - lobe, c - lobe, lobe, lobe)
        - ii.area(r + 1, c + 1, lobe, lobe);
    (dxx * inv_area, dyy * inv_area, dxy * inv_area)
}

/// Determinant-of-Hessian response map `Dxx·Dyy − (0.9·Dxy)²` for a box
/// filter of side `filter_size` (9, 15, 21, ...). Pixels where the filter
/// does not fit are 0.
pub fn hessian_response(ii: &IntegralImage, filter_size: usize) -> Result<ResponseMap> {
    if !is_valid_filter_size(filter_size) {
        return Err(FeatureError::BadFilterSize { size: filter_size });
    }
    let (w, h) = (ii.width(), ii.height());
    if filter_size > w || filter_size > h {
        return Err(FeatureError::FilterTooLarge { size: filter_size, width: w, height: h });
    }
    let b = (filter_size - 1) / 2;
    let mut values = vec![0.0; w * h];
    let mut laplacian_positive = vec![false; w * h];
    for r in b..h - b {
        for c in b..w - b {
            let (dxx, dyy, dxy) = derivatives(ii, r as i64, c as i64, filter_size as i64);
            values[r * w + c] = dxx * dyy - (DXY_WEIGHT * dxy).powi(2);
            laplacian_positive[r * w + c] = dxx + dyy >= 0.0;
        }
    }
    Ok(ResponseMap { filter_size, width: w, height: h, values, laplacian_positive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surf::integral::{integral_image, GrayMatrix};
    use crate::surf::render::gaussian_blob;

    #[test]
    fn filter_sizes() {
        assert!(is_valid_filter_size(9) && is_valid_filter_size(15) && is_valid_filter_size(129));
        assert!(!is_valid_filter_size(8) && !is_valid_filter_size(12) && !is_valid_filter_size(3));
        assert_eq!([32, 64, 96, 128].map(snap_filter_size), [33, 63, 99, 129]);
        assert!((filter_sigma(9.0) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn constant_image_has_zero_response() {
        let ii = integral_image(&GrayMatrix::new(40, 40, vec![0.7; 1600]).unwrap());
        for size in [9, 15, 21] {
            let map = hessian_response(&ii, size).unwrap();
            assert!(map.values().iter().all(|&v| v.abs() < 1e-15), "size {size}");
        }
    }

    #[test]
    fn invalid_sizes_rejected() {
        let ii = integral_image(&GrayMatrix::new(20, 20, vec![0.0; 400]).unwrap());
        assert!(matches!(hessian_response(&ii, 10), Err(FeatureError::BadFilterSize { .. })));
        assert!(matches!(hessian_response(&ii, 21), Err(FeatureError::FilterTooLarge { .. })));
    }

    #[test]
    fn blob_maximum_near_centre() {
        for (size, sigma) in [(9usize, 1.2), (15, 2.0), (21, 2.8)] {
            let img = gaussian_blob(64, 64, &[(31.0, 33.0, sigma, 1.0)], 0.1);
            let map = hessian_response(&integral_image(&img), size).unwrap();
            let (mut best, mut at) = (f64::MIN, (0, 0));
            for r in 0..64 {
                for c in 0..64 {
                    if map.get(r, c) > best {
                        best = map.get(r, c);
                        at = (r, c);
                    }
                }
            }
            let d = ((at.0 as f64 - 33.0).powi(2) + (at.1 as f64 - 31.0).powi(2)).sqrt();
            assert!(d <= 2.0, "size {size}: max at {at:?}");
            assert!(best > 0.0);
            assert!(!map.laplacian_positive(at.0, at.1), "bright blob has negative trace");
        }
    }

    #[test]
    fn intensity_scaling_and_offset() {
        let img = gaussian_blob(48, 48, &[(20.0, 25.0, 2.0, 0.8), (30.0, 12.0, 1.5, -0.3)], 0.2);
        let base = hessian_response(&integral_image(&img), 15).unwrap();
        let doubled = hessian_response(&integral_image(&img.map(|v| 2.0 * v)), 15).unwrap();
        let shifted = hessian_response(&integral_image(&img.map(|v| v + 3.5)), 15).unwrap();
        let scale = base.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for ((a, b), c) in base.values().iter().zip(doubled.values()).zip(shifted.values()) {
            // scaling by 2 is exact in binary floating point
            assert_eq!(*b, 4.0 * a);
            assert!((c - a).abs() <= 1e-9 * scale, "{a} vs {c}");
        }
    }
}
