use serde::{Deserialize, Serialize};

use crate::{MetricsError, Result, Scores, Signs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub n_excluded: usize,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// How threshold-free per-label measures (Ap, Auc) are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Per label across instances, then mean over labels.
    #[default]
    MacroLabels,
    /// Per instance across labels, then mean over instances.
    Instances,
}

fn check_shapes(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(MetricsError::ShapeMismatch { left: a, right: b });
    }
    if a.0 == 0 || a.1 == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

fn is_pos(v: i8) -> bool {
    v == 1
}

/// Mean of the per-unit values that are defined; `None` entries are
/// excluded and logged.
fn mean_defined(metric: &'static str, unit: &'static str, values: Vec<Option<f64>>) -> Result<MetricValue> {
    let total = values.len();
    let kept: Vec<f64> = values.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(MetricsError::AllDegenerate { metric, unit });
    }
    let n_excluded = total - kept.len();
    let mut notes = Vec::new();
    if n_excluded > 0 {
        log::warn!("{metric}: excluded {n_excluded} degenerate {unit}(s)");
        notes.push(format!("excluded {n_excluded} degenerate {unit}(s)"));
    }
    Ok(MetricValue { value: kept.iter().sum::<f64>() / kept.len() as f64, n_excluded, notes })
}

/// Fraction of label slots predicted incorrectly.
pub fn hamming_loss(truth: &Signs, predicted: &Signs) -> Result<f64> {
    check_shapes(truth.shape(), predicted.shape())?;
    let wrong = truth.iter().zip(predicted.iter()).filter(|(t, p)| is_pos(**t) != is_pos(**p)).count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// Mean over instances of |pred ∩ true| / |pred ∪ true|; an instance with
/// both sets empty scores 1.
pub fn jaccard_score(truth: &Signs, predicted: &Signs) -> Result<f64> {
    check_shapes(truth.shape(), predicted.shape())?;
    let total: f64 = truth
        .column_iter()
        .zip(predicted.column_iter())
        .map(|(t, p)| {
            let (mut inter, mut union) = (0usize, 0usize);
            for (&a, &b) in t.iter().zip(p.iter()) {
                inter += (is_pos(a) && is_pos(b)) as usize;
                union += (is_pos(a) || is_pos(b)) as usize;
            }
            if union == 0 {
                1.0
            } else {
                inter as f64 / union as f64
            }
        })
        .sum();
    Ok(total / truth.ncols() as f64)
}

/// Fraction of (positive, negative) label pairs where the negative scores at
/// least as high as the positive. Instances lacking positives or negatives
/// are excluded.
pub fn ranking_loss(scores: &Scores, truth: &Signs) -> Result<MetricValue> {
    check_shapes(scores.shape(), truth.shape())?;
    let per_instance = (0..scores.ncols())
        .map(|i| {
            let mut neg: Vec<f64> = Vec::new();
            let mut pos: Vec<f64> = Vec::new();
            for j in 0..scores.nrows() {
                if is_pos(truth[(j, i)]) {
                    pos.push(scores[(j, i)]);
                } else {
                    neg.push(scores[(j, i)]);
                }
            }
            if pos.is_empty() || neg.is_empty() {
                return None;
            }
            neg.sort_by(f64::total_cmp);
            // negatives with score >= s are the tail starting at the first element >= s
            let violations: usize = pos.iter().map(|&s| neg.len() - neg.partition_point(|&n| n < s)).sum();
            Some(violations as f64 / (pos.len() * neg.len()) as f64)
        })
        .collect();
    mean_defined("rkl", "instance", per_instance)
}

/// Mean depth of the lowest-ranked positive label minus one. Ranking is by
/// descending score with ties broken by lower label index first.
pub fn coverage(scores: &Scores, truth: &Signs) -> Result<MetricValue> {
    check_shapes(scores.shape(), truth.shape())?;
    let per_instance = (0..scores.ncols())
        .map(|i| {
            let col = scores.column(i);
            (0..scores.nrows())
                .filter(|&j| is_pos(truth[(j, i)]))
                .map(|j| {
                    let s = col[j];
                    let ahead = (0..col.len()).filter(|&k| col[k] > s || (col[k] == s && k < j)).count();
                    ahead + 1
                })
                .max()
                .map(|rank| (rank - 1) as f64)
        })
        .collect();
    mean_defined("cvg", "instance", per_instance)
}

/// Area under the precision-recall step curve, Σ (R_t − R_{t−1}) P_t over
/// distinct descending score thresholds. `None` without positives.
fn sweep_average_precision(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    if n_pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let mut new_tp = 0;
        while k < order.len() && scores[order[k]] == s {
            new_tp += positive[order[k]] as usize;
            seen += 1;
            k += 1;
        }
        tp += new_tp;
        if new_tp > 0 {
            ap += (new_tp as f64 / n_pos as f64) * (tp as f64 / seen as f64);
        }
    }
    Some(ap)
}

/// Mann–Whitney statistic with mid-ranks (ties credit 0.5). `None` unless
/// both classes are present.
fn mann_whitney_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut k = 0;
    while k < order.len() {
        let start = k;
        while k < order.len() && scores[order[k]] == scores[order[start]] {
            k += 1;
        }
        // ranks start+1 ..= k share their mean
        let mid = (start + 1 + k) as f64 / 2.0;
        rank_sum_pos += mid * order[start..k].iter().filter(|&&i| positive[i]).count() as f64;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

fn per_unit<F>(scores: &Scores, truth: &Signs, agg: Aggregation, f: F) -> Vec<Option<f64>>
where
    F: Fn(&[f64], &[bool]) -> Option<f64>,
{
    match agg {
        Aggregation::MacroLabels => (0..scores.nrows())
            .map(|j| {
                let s: Vec<f64> = scores.row(j).iter().copied().collect();
                let p: Vec<bool> = truth.row(j).iter().map(|&v| is_pos(v)).collect();
                f(&s, &p)
            })
            .collect(),
        Aggregation::Instances => (0..scores.ncols())
            .map(|i| {
                let s: Vec<f64> = scores.column(i).iter().copied().collect();
                let p: Vec<bool> = truth.column(i).iter().map(|&v| is_pos(v)).collect();
                f(&s, &p)
            })
            .collect(),
    }
}

fn unit_name(agg: Aggregation) -> &'static str {
    match agg {
        Aggregation::MacroLabels => "label",
        Aggregation::Instances => "instance",
    }
}

pub fn average_precision(scores: &Scores, truth: &Signs, agg: Aggregation) -> Result<MetricValue> {
    check_shapes(scores.shape(), truth.shape())?;
    mean_defined("ap", unit_name(agg), per_unit(scores, truth, agg, sweep_average_precision))
}

pub fn auc(scores: &Scores, truth: &Signs, agg: Aggregation) -> Result<MetricValue> {
    check_shapes(scores.shape(), truth.shape())?;
    mean_defined("auc", unit_name(agg), per_unit(scores, truth, agg, mann_whitney_auc))
}

pub fn auc_macro(scores: &Scores, truth: &Signs) -> Result<MetricValue> {
    auc(scores, truth, Aggregation::MacroLabels)
}
