use crate::error::{FeatureError, Result};

/// Row-major grayscale raster with real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayMatrix {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayMatrix {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(FeatureError::EmptyImage);
        }
        if pixels.len() != width * height {
            return Err(FeatureError::Dimension { expected: width * height, actual: pixels.len() });
        }
        Ok(GrayMatrix { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let pixels = (0..height).flat_map(|r| (0..width).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        Self::new(width, height, pixels)
    }

    /// 8-bit luminance scaled to `[0, 1]`.
    pub fn from_gray(img: &needscope_core::GrayImage) -> Result<Self> {
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.as_raw().iter().map(|&v| v as f64 / 255.0).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayMatrix {
        GrayMatrix { width: self.width, height: self.height, pixels: self.pixels.iter().map(|&v| f(v)).collect() }
    }

    /// Quarter turn: pixel `(r, c)` moves to `(c, height - 1 - r)`.
    pub fn rotate90(&self) -> GrayMatrix {
        let (w, h) = (self.height, self.width);
        let mut pixels = vec![0.0; w * h];
        for r in 0..self.height {
            for c in 0..self.width {
                pixels[c * w + (self.height - 1 - r)] = self.get(r, c);
            }
        }
        GrayMatrix { width: w, height: h, pixels }
    }
}

/// Summed-area table. `sum_at(r, c)` is the sum of the source over rows
/// `0..=r` and columns `0..=c`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    // (height + 1) x (width + 1) with a zero first row and column
    table: Vec<f64>,
}

pub fn integral_image(img: &GrayMatrix) -> IntegralImage {
    let (w, h) = (img.width, img.height);
    let stride = w + 1;
    let mut table = vec![0.0; (h + 1) * stride];
    for r in 0..h {
        let mut row_sum = 0.0;
        for c in 0..w {
            row_sum += img.get(r, c);
            table[(r + 1) * stride + c + 1] = table[r * stride + c + 1] + row_sum;
        }
    }
    IntegralImage { width: w, height: h, table }
}

impl IntegralImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.table[r * (self.width + 1) + c]
    }

    pub fn sum_at(&self, row: usize, col: usize) -> f64 {
        self.at(row + 1, col + 1)
    }

    /// Sum over the inclusive rectangle `[r0, r1] x [c0, c1]`.
    pub fn box_sum(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> f64 {
        debug_assert!(r0 <= r1 && c0 <= c1 && r1 < self.height && c1 < self.width);
        self.at(r1 + 1, c1 + 1) - self.at(r0, c1 + 1) - self.at(r1 + 1, c0) + self.at(r0, c0)
    }

    /// Sum over `rows x cols` pixels starting at `(row, col)`, clipped to the image.
    #[inline]
    pub fn area(&self, row: i64, col: i64, rows: i64, cols: i64) -> f64 {
        let r0 = row.clamp(0, self.height as i64) as usize;
        let c0 = col.clamp(0, self.width as i64) as usize;
        let r1 = (row + rows).clamp(0, self.height as i64) as usize;
        let c1 = (col + cols).clamp(0, self.width as i64) as usize;
        if r1 <= r0 || c1 <= c0 {
            return 0.0;
        }
        self.at(r1, c1) - self.at(r0, c1) - self.at(r1, c0) + self.at(r0, c0)
    }

    /// Whether the `rows x cols` box at `(row, col)` lies fully inside the image.
    pub fn contains(&self, row: i64, col: i64, rows: i64, cols: i64) -> bool {
        row >= 0 && col >= 0 && row + rows <= self.height as i64 && col + cols <= self.width as i64
    }

    /// Horizontal Haar wavelet of side `size` centred at `(row, col)`: right half minus left half.
    pub fn haar_x(&self, row: i64, col: i64, size: i64) -> f64 {
        let h = size / 2;
        self.area(row - h, col, size, h) - self.area(row - h, col - h, size, h)
    }

    /// Vertical Haar wavelet: bottom half minus top half.
    pub fn haar_y(&self, row: i64, col: i64, size: i64) -> f64 {
        let h = size / 2;
        self.area(row, col - h, h, size) - self.area(row - h, col - h, h, size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two() {
        let img = GrayMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let ii = integral_image(&img);
        let sums: Vec<f64> = (0..2).flat_map(|r| (0..2).map(move |c| (r, c))).map(|(r, c)| ii.sum_at(r, c)).collect();
        assert_eq!(sums, vec![1.0, 3.0, 4.0, 10.0]);
        assert_eq!(ii.box_sum(1, 1, 1, 1), 4.0);
        assert_eq!(ii.box_sum(0, 1, 1, 1), 6.0);
    }

    #[test]
    fn zero_image() {
        let ii = integral_image(&GrayMatrix::new(5, 3, vec![0.0; 15]).unwrap());
        assert!((0..3).all(|r| (0..5).all(|c| ii.sum_at(r, c) == 0.0)));
    }

    #[test]
    fn empty_image_rejected() {
        assert!(matches!(GrayMatrix::new(0, 4, vec![]), Err(FeatureError::EmptyImage)));
    }

    #[test]
    fn rotate90_moves_pixels() {
        let img = GrayMatrix::from_fn(3, 2, |r, c| (r * 3 + c) as f64).unwrap();
        let rot = img.rotate90();
        assert_eq!((rot.width(), rot.height()), (2, 3));
        assert_eq!(rot.get(0, 1), img.get(0, 0));
        assert_eq!(rot.get(2, 0), img.get(1, 2));
    }

    proptest! {
        #[test]
        fn box_sums_match_naive(pixels in proptest::collection::vec(0u8..=255, 16 * 16), rect in (0usize..16, 0usize..16, 0usize..16, 0usize..16)) {
            let img = GrayMatrix::new(16, 16, pixels.iter().map(|&p| p as f64).collect()).unwrap();
            let ii = integral_image(&img);
            let (r0, r1) = (rect.0.min(rect.1), rect.0.max(rect.1));
            let (c0, c1) = (rect.2.min(rect.3), rect.2.max(rect.3));
            let mut naive = 0.0;
            for r in r0..=r1 {
                for c in c0..=c1 {
                    naive += img.get(r, c);
                }
            }
            prop_assert_eq!(ii.box_sum(r0, c0, r1, c1), naive);
            prop_assert_eq!(ii.area(r0 as i64, c0 as i64, (r1 - r0 + 1) as i64, (c1 - c0 + 1) as i64), naive);
            // monotone for non-negative sources
            prop_assert!(ii.sum_at(r1, c1) >= ii.sum_at(r0, c0));
        }
    }

    #[test]
    fn full_box_is_total() {
        let img = GrayMatrix::from_fn(7, 5, |r, c| (r * 7 + c) as f64).unwrap();
        let ii = integral_image(&img);
        assert_eq!(ii.box_sum(0, 0, 4, 6), (0..35).sum::<usize>() as f64);
    }
}
