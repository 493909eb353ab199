//! Exhaustive reimplementations of the six measures, written directly from
//! their set/pair definitions. Shared with the acceptance suite.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

pub type Scores = DMatrix<f64>;
pub type Signs = DMatrix<i8>;

fn positives(truth: &Signs, i: usize) -> BTreeSet<usize> {
    (0..truth.nrows()).filter(|&j| truth[(j, i)] == 1).collect()
}

pub fn hamming(truth: &Signs, pred: &Signs) -> f64 {
    let mut wrong = 0;
    for j in 0..truth.nrows() {
        for i in 0..truth.ncols() {
            if (truth[(j, i)] == 1) != (pred[(j, i)] == 1) {
                wrong += 1;
            }
        }
    }
    wrong as f64 / (truth.nrows() * truth.ncols()) as f64
}

pub fn jaccard(truth: &Signs, pred: &Signs) -> f64 {
    let mut total = 0.0;
    for i in 0..truth.ncols() {
        let t = positives(truth, i);
        let p = positives(pred, i);
        let union = t.union(&p).count();
        total += if union == 0 { 1.0 } else { t.intersection(&p).count() as f64 / union as f64 };
    }
    total / truth.ncols() as f64
}

/// `None` when every instance is degenerate.
pub fn ranking_loss(scores: &Scores, truth: &Signs) -> Option<f64> {
    let mut vals = Vec::new();
    for i in 0..scores.ncols() {
        let pos = positives(truth, i);
        let neg: BTreeSet<usize> = (0..scores.nrows()).filter(|j| !pos.contains(j)).collect();
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let mut bad = 0;
        for &a in &pos {
            for &b in &neg {
                if scores[(a, i)] <= scores[(b, i)] {
                    bad += 1;
                }
            }
        }
        vals.push(bad as f64 / (pos.len() * neg.len()) as f64);
    }
    mean(&vals)
}

pub fn coverage(scores: &Scores, truth: &Signs) -> Option<f64> {
    let mut vals = Vec::new();
    for i in 0..scores.ncols() {
        let pos = positives(truth, i);
        if pos.is_empty() {
            continue;
        }
        let mut ranking: Vec<usize> = (0..scores.nrows()).collect();
        // stable sort keeps lower label index first among ties
        ranking.sort_by(|&a, &b| scores[(b, i)].partial_cmp(&scores[(a, i)]).unwrap());
        let deepest = ranking.iter().rposition(|j| pos.contains(j)).unwrap();
        vals.push(deepest as f64);
    }
    mean(&vals)
}

fn threshold_sweep_ap(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    if n_pos == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let selected: Vec<usize> = (0..scores.len()).filter(|&k| scores[k] >= t).collect();
        let tp = selected.iter().filter(|&&k| positive[k]).count();
        let precision = tp as f64 / selected.len() as f64;
        let recall = tp as f64 / n_pos as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}

fn pair_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let mut credit = 0.0;
    let mut pairs = 0usize;
    for a in 0..scores.len() {
        for b in 0..scores.len() {
            if positive[a] && !positive[b] {
                pairs += 1;
                if scores[a] > scores[b] {
                    credit += 1.0;
                } else if scores[a] == scores[b] {
                    credit += 0.5;
                }
            }
        }
    }
    (pairs > 0).then(|| credit / pairs as f64)
}

fn per_label(scores: &Scores, truth: &Signs, f: fn(&[f64], &[bool]) -> Option<f64>) -> Option<f64> {
    let vals: Vec<f64> = (0..scores.nrows())
        .filter_map(|j| {
            let s: Vec<f64> = (0..scores.ncols()).map(|i| scores[(j, i)]).collect();
            let p: Vec<bool> = (0..scores.ncols()).map(|i| truth[(j, i)] == 1).collect();
            f(&s, &p)
        })
        .collect();
    mean(&vals)
}

fn per_instance(scores: &Scores, truth: &Signs, f: fn(&[f64], &[bool]) -> Option<f64>) -> Option<f64> {
    let vals: Vec<f64> = (0..scores.ncols())
        .filter_map(|i| {
            let s: Vec<f64> = (0..scores.nrows()).map(|j| scores[(j, i)]).collect();
            let p: Vec<bool> = (0..scores.nrows()).map(|j| truth[(j, i)] == 1).collect();
            f(&s, &p)
        })
        .collect();
    mean(&vals)
}

pub fn ap_macro(scores: &Scores, truth: &Signs) -> Option<f64> {
    per_label(scores, truth, threshold_sweep_ap)
}

pub fn ap_instances(scores: &Scores, truth: &Signs) -> Option<f64> {
    per_instance(scores, truth, threshold_sweep_ap)
}

pub fn auc_macro(scores: &Scores, truth: &Signs) -> Option<f64> {
    per_label(scores, truth, pair_auc)
}

pub fn auc_instances(scores: &Scores, truth: &Signs) -> Option<f64> {
    per_instance(scores, truth, pair_auc)
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
