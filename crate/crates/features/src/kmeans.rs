//! Lloyd's k-means with seeded k-means++ initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FeatureError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centers: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Inertia after every assignment step, including the final one.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        *self.inertia_trace.last().unwrap_or(&0.0)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lowest index.
pub fn nearest_center<C: AsRef<[f64]>>(point: &[f64], centers: &[C]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = squared_distance(point, c.as_ref());
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-means++: first center uniform, each next one drawn with probability
/// proportional to the squared distance to the closest chosen center. When
/// every remaining point coincides with a center, the lowest-index point not
/// yet chosen is taken, so duplicate centers are possible only if the data
/// has fewer than `k` distinct points.
fn seed_centers<P: AsRef<[f64]>>(points: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p.as_ref(), points[chosen[0]].as_ref())).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // floating-point shortfall: fall back to the last positive weight
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("positive total"))
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("n >= k")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p.as_ref(), points[next].as_ref()));
        }
    }
    chosen
}

/// Assigns every point, returning (assignments, per-point squared distances).
fn assign<P: AsRef<[f64]>>(points: &[P], centers: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    points.iter().map(|p| nearest_center(p.as_ref(), centers)).unzip()
}

/// Runs Lloyd iterations until the largest center shift falls below `tol`
/// or `max_iter` updates have been made.
///
/// An empty cluster is re-seeded at the point farthest from its assigned
/// center (lowest index on ties), which never increases the inertia.
pub fn kmeans<P: AsRef<[f64]>>(points: &[P], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansFit> {
    let n = points.len();
    if k == 0 || n < k {
        return Err(FeatureError::TooFewPoints { n, k });
    }
    let dim = points[0].as_ref().len();
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != dim) {
        return Err(FeatureError::Dimension { expected: dim, actual: p.as_ref().len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> =
        seed_centers(points, k, &mut rng).into_iter().map(|i| points[i].as_ref().to_vec()).collect();

    let mut inertia_trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let (mut assignments, mut dists) = assign(points, &centers);
        let mut counts = vec![0usize; k];
        assignments.iter().for_each(|&a| counts[a] += 1);
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[assignments[i]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                counts[assignments[i]] -= 1;
                counts[c] = 1;
                assignments[i] = c;
                dists[i] = 0.0;
                centers[c] = points[i].as_ref().to_vec();
            }
        }
        inertia_trace.push(dists.iter().sum());
        if converged || iterations >= max_iter {
            return Ok(KMeansFit { centers, assignments, inertia_trace, iterations, converged });
        }

        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in points.iter().zip(&assignments) {
            for (s, v) in sums[a].iter_mut().zip(p.as_ref()) {
                *s += v;
            }
        }
        let mut shift = 0.0f64;
        for (c, (sum, &count)) in sums.into_iter().zip(&counts).enumerate() {
            if count == 0 {
                continue;
            }
            let mean: Vec<f64> = sum.into_iter().map(|s| s / count as f64).collect();
            shift = shift.max(squared_distance(&mean, &centers[c]).sqrt());
            centers[c] = mean;
        }
        iterations += 1;
        converged = shift < tol;
    }
}
