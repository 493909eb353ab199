use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::measures::{auc, average_precision, coverage, hamming_loss, jaccard_score, ranking_loss};
use crate::{Aggregation, MetricValue, MetricsError, Result, Scores, Signs};

/// The six measures, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rkl,
    Auc,
    Cvg,
    Ap,
    Hl,
    Jsc,
}

impl Metric {
    pub const ALL: [Metric; 6] = [Metric::Rkl, Metric::Auc, Metric::Cvg, Metric::Ap, Metric::Hl, Metric::Jsc];

    pub fn key(self) -> &'static str {
        match self {
            Metric::Rkl => "rkl",
            Metric::Auc => "auc",
            Metric::Cvg => "cvg",
            Metric::Ap => "ap",
            Metric::Hl => "hl",
            Metric::Jsc => "jsc",
        }
    }

    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::Auc | Metric::Ap | Metric::Jsc)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Rkl => "Rkl",
            Metric::Auc => "Auc",
            Metric::Cvg => "Cvg",
            Metric::Ap => "Ap",
            Metric::Hl => "Hl",
            Metric::Jsc => "Jsc",
        })
    }
}

/// Scores, ground truth and thresholded predictions for one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricInput {
    pub scores: Scores,
    pub truth: Signs,
    pub thresholded: Signs,
}

impl MetricInput {
    pub fn new(scores: Scores, truth: Signs, thresholded: Signs) -> Result<Self> {
        for other in [truth.shape(), thresholded.shape()] {
            if other != scores.shape() {
                return Err(MetricsError::ShapeMismatch { left: scores.shape(), right: other });
            }
        }
        if scores.is_empty() {
            return Err(MetricsError::Empty);
        }
        if let Some(i) = truth.column_iter().position(|c| c.iter().all(|&v| v != 1)) {
            return Err(MetricsError::NoPositiveLabel(i));
        }
        Ok(MetricInput { scores, truth, thresholded })
    }
}

/// Flat `{metric, value, n_excluded, notes}` record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub metric: Metric,
    pub value: f64,
    pub n_excluded: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub values: BTreeMap<Metric, MetricValue>,
    /// Measures that could not be computed, with the reason.
    pub undefined: BTreeMap<Metric, String>,
}

impl MetricReport {
    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values.get(&m).map(|v| v.value)
    }

    pub fn records(&self) -> Vec<MetricRecord> {
        Metric::ALL
            .iter()
            .map(|&metric| match self.values.get(&metric) {
                Some(v) => MetricRecord { metric, value: v.value, n_excluded: v.n_excluded, notes: v.notes.clone() },
                None => MetricRecord {
                    metric,
                    value: f64::NAN,
                    n_excluded: 0,
                    notes: self.undefined.get(&metric).cloned().into_iter().collect(),
                },
            })
            .collect()
    }
}

/// Computes all six measures. A measure that is undefined on this input
/// (every unit degenerate) is recorded in [`MetricReport::undefined`].
pub fn evaluate(input: &MetricInput, agg: Aggregation) -> MetricReport {
    let MetricInput { scores, truth, thresholded } = input;
    let mut report = MetricReport::default();
    let results: [(Metric, Result<MetricValue>); 6] = [
        (Metric::Rkl, ranking_loss(scores, truth)),
        (Metric::Auc, auc(scores, truth, agg)),
        (Metric::Cvg, coverage(scores, truth)),
        (Metric::Ap, average_precision(scores, truth, agg)),
        (Metric::Hl, hamming_loss(truth, thresholded).map(plain)),
        (Metric::Jsc, jaccard_score(truth, thresholded).map(plain)),
    ];
    for (m, r) in results {
        match r {
            Ok(v) => {
                report.values.insert(m, v);
            }
            Err(e) => {
                report.undefined.insert(m, e.to_string());
            }
        }
    }
    report
}

fn plain(value: f64) -> MetricValue {
    MetricValue { value, n_excluded: 0, notes: Vec::new() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn column_order_matches_report_table() {
        let keys: Vec<_> = Metric::ALL.iter().map(|m| m.key()).collect();
        assert_eq!(keys, ["rkl", "auc", "cvg", "ap", "hl", "jsc"]);
    }

    #[test]
    fn input_requires_a_positive_per_instance() {
        let s = DMatrix::zeros(5, 2);
        let mut t = DMatrix::from_element(5, 2, -1i8);
        t[(0, 0)] = 1;
        assert!(matches!(MetricInput::new(s.clone(), t.clone(), t.clone()), Err(MetricsError::NoPositiveLabel(1))));
        t[(3, 1)] = 1;
        assert!(MetricInput::new(s, t.clone(), t).is_ok());
    }

    #[test]
    fn single_instance_macro_auc_is_undefined() {
        let s = DMatrix::from_column_slice(5, 1, &[0.9, 0.1, 0.2, 0.3, 0.4]);
        let t = DMatrix::from_column_slice(5, 1, &[1, -1, -1, -1, -1]);
        let input = MetricInput::new(s, t.clone(), t).unwrap();
        let macro_report = evaluate(&input, Aggregation::MacroLabels);
        assert!(macro_report.undefined.contains_key(&Metric::Auc));
        let inst = evaluate(&input, Aggregation::Instances);
        assert_eq!(inst.get(Metric::Auc), Some(1.0));
        assert_eq!(inst.get(Metric::Ap), Some(1.0));
        assert_eq!(inst.records().len(), 6);
    }
}
