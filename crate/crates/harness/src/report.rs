//! Evaluation report: per-space pooled metrics, per-fold means with 95%
//! Student-t half-widths, and per-fold predictions. Written as CSV and JSON,
//! optionally with SVG plots. Files carry no timing so reruns match bitwise.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use needscope_core::FeatureSpace;
use needscope_metrics::{Metric, MetricReport};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CSV_HEADER: &str = "feature_space,dim,rkl,rkl_ci,auc,auc_ci,cvg,cvg_ci,ap,ap_ci,hl,hl_ci,jsc,jsc_ci";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    /// Held-out profile.
    pub profile: String,
    /// Feature dimension in this fold, bias excluded.
    pub dim: usize,
    pub scores: Vec<f64>,
    pub predicted: Vec<i8>,
    /// Labels with no positive training profile; scored lowest and predicted
    /// negative. A non-empty list flags the fold.
    pub excluded_labels: Vec<usize>,
    pub sweeps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceReport {
    pub space: FeatureSpace,
    /// Dimension of the first fold. Tag dictionaries and thus the tag
    /// dimensions can vary by fold.
    pub dim: usize,
    /// Metrics over all folds' predictions at once; the headline number.
    pub pooled: MetricReport,
    /// Mean of per-fold metrics over the folds where they are defined.
    pub fold_mean: BTreeMap<Metric, f64>,
    pub ci_half_width: BTreeMap<Metric, f64>,
    pub n_folds: usize,
    pub flagged_folds: Vec<String>,
    pub folds: Vec<FoldOutcome>,
    /// GLOCAL objective trace of the first fold.
    pub example_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub seed: u64,
    /// Components were fitted once on all profiles, test profiles included.
    pub fast_leaky: bool,
    pub n_profiles: usize,
    pub spaces: Vec<SpaceReport>,
}

impl EvaluationReport {
    pub fn space(&self, space: FeatureSpace) -> Option<&SpaceReport> {
        self.spaces.iter().find(|s| s.space == space)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for s in &self.spaces {
            let _ = write!(out, "{},{}", s.space, s.dim);
            for m in Metric::ALL {
                let _ = write!(out, ",{},{}", num(s.pooled.get(m)), num(s.ci_half_width.get(&m).copied()));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| HarnessError::Json { path: origin.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text, path)
    }

    /// Plain-text table of pooled values with half-widths.
    pub fn table(&self) -> String {
        let mut out = format!("{:<8} {:>5}", "space", "dim");
        for m in Metric::ALL {
            let _ = write!(out, " {:>16}", m.to_string());
        }
        out.push('\n');
        for s in &self.spaces {
            let _ = write!(out, "{:<8} {:>5}", s.space.to_string(), s.dim);
            for m in Metric::ALL {
                let cell = match (s.pooled.get(m), s.ci_half_width.get(&m)) {
                    (Some(v), Some(h)) => format!("{v:.4} ±{h:.3}"),
                    (Some(v), None) => format!("{v:.4}"),
                    _ => "NA".into(),
                };
                let _ = write!(out, " {cell:>16}");
            }
            out.push('\n');
        }
        if self.fast_leaky {
            out.push_str("(fast-leaky: vocabularies, dictionaries and embeddings saw the test profiles)\n");
        }
        out
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| v.to_string())
}

/// Writes `report.csv`, `report.json` and, with `svg`, `metrics.svg` and
/// `trace.svg` into `dir`. Returns the written paths.
pub fn emit_report(report: &EvaluationReport, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = vec![(dir.join("report.csv"), report.to_csv()), (dir.join("report.json"), report.to_json())];
    if svg {
        files.push((dir.join("metrics.svg"), metrics_svg(report)));
        files.push((dir.join("trace.svg"), trace_svg(report)));
    }
    for (path, body) in &files {
        fs::write(path, body).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

const COLOURS: [&str; 5] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3"];

/// Grouped bars: one group per metric, one bar per space.
pub fn metrics_svg(report: &EvaluationReport) -> String {
    let (w, h, pad) = (720.0, 320.0, 40.0);
    let group = (w - 2.0 * pad) / Metric::ALL.len() as f64;
    let bar = group * 0.8 / report.spaces.len().max(1) as f64;
    let mut max = report.spaces.iter().filter_map(|s| Metric::ALL.iter().filter_map(|&m| s.pooled.get(m)).reduce(f64::max)).fold(1.0, f64::max);
    max *= 1.05;
    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    for (g, m) in Metric::ALL.iter().enumerate() {
        let x0 = pad + g as f64 * group;
        let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{m}</text>", x0 + group / 2.0, h - pad / 3.0);
        for (j, s) in report.spaces.iter().enumerate() {
            if let Some(v) = s.pooled.get(*m) {
                let bh = (h - 2.0 * pad) * v / max;
                let _ = writeln!(
                    out,
                    "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{bar:.1}\" height=\"{bh:.1}\" fill=\"{}\"><title>{} {m} {v:.4}</title></rect>",
                    x0 + group * 0.1 + j as f64 * bar,
                    h - pad - bh,
                    COLOURS[j % COLOURS.len()],
                    s.space
                );
            }
        }
    }
    for (j, s) in report.spaces.iter().enumerate() {
        let _ = writeln!(out, "<text x=\"{:.1}\" y=\"16\" font-size=\"12\" fill=\"{}\">{}</text>", pad + j as f64 * 90.0, COLOURS[j % COLOURS.len()], s.space);
    }
    out.push_str("</svg>\n");
    out
}

/// Objective trace of each space's first fold, normalized by its start value.
pub fn trace_svg(report: &EvaluationReport) -> String {
    let (w, h, pad) = (720.0, 320.0, 40.0);
    let longest = report.spaces.iter().map(|s| s.example_trace.len()).max().unwrap_or(1).max(2) - 1;
    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n");
    let _ = writeln!(out, "<text x=\"{pad}\" y=\"16\" font-size=\"12\">objective / initial objective by sweep</text>");
    for (j, s) in report.spaces.iter().enumerate() {
        let Some(&f0) = s.example_trace.first().filter(|f| **f > 0.0) else { continue };
        let points: Vec<String> = s
            .example_trace
            .iter()
            .enumerate()
            .map(|(i, f)| format!("{:.1},{:.1}", pad + (w - 2.0 * pad) * i as f64 / longest as f64, h - pad - (h - 2.0 * pad) * f / f0))
            .collect();
        let _ = writeln!(out, "<polyline fill=\"none\" stroke=\"{}\" points=\"{}\"><title>{}</title></polyline>", COLOURS[j % COLOURS.len()], points.join(" "), s.space);
    }
    out.push_str("</svg>\n");
    out
}
