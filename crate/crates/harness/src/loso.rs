//! Leave-one-subject-out evaluation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use needscope_core::{FeatureSpace, Need};
use needscope_glocal::{predict, train, TrainingData};
use needscope_metrics::{evaluate, Aggregation, Metric, MetricInput};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::ExperimentConfig;
use crate::corpus::Corpus;
use crate::error::{HarnessError, Result};
use crate::pipeline::{feature_matrix, fit_fold, FoldFit, Standardizer};
use crate::report::{EvaluationReport, FoldOutcome, SpaceReport};

struct FoldResult {
    outcomes: Vec<FoldOutcome>,
    traces: Vec<Vec<f64>>,
}

/// One fold per profile. Folds run in parallel on the current rayon pool;
/// the report does not depend on scheduling.
pub fn run_loso(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    corpus.check(cfg)?;
    let n = corpus.dataset.len();
    let spaces = cfg.evaluated_spaces();
    let shared = if cfg.fast_leaky {
        log::warn!("fast-leaky mode: feature components are fitted on all profiles, test profiles included");
        Some(fit_fold(corpus, &(0..n).collect::<Vec<_>>(), cfg)?)
    } else {
        None
    };
    let folds: Vec<FoldResult> = (0..n).into_par_iter().map(|test| run_fold(corpus, cfg, &spaces, test, shared.as_ref())).collect::<Result<_>>()?;
    let mut reports = Vec::with_capacity(spaces.len());
    for (s, &space) in spaces.iter().enumerate() {
        let outcomes: Vec<FoldOutcome> = folds.iter().map(|f| f.outcomes[s].clone()).collect();
        reports.push(summarize(corpus, space, outcomes, folds[0].traces[s].clone())?);
    }
    Ok(EvaluationReport { seed: cfg.seed, fast_leaky: cfg.fast_leaky, n_profiles: n, spaces: reports })
}

fn run_fold(corpus: &Corpus, cfg: &ExperimentConfig, spaces: &[FeatureSpace], test: usize, shared: Option<&FoldFit>) -> Result<FoldResult> {
    let n = corpus.dataset.len();
    let train_idx: Vec<usize> = (0..n).filter(|&i| i != test).collect();
    let owned;
    let fit = match shared {
        Some(f) => f,
        None => {
            owned = fit_fold(corpus, &train_idx, cfg)?;
            &owned
        }
    };
    let labels = corpus.dataset.label_matrix();
    let present: Vec<usize> = (0..Need::COUNT).filter(|&l| train_idx.iter().any(|&j| labels[(l, j)] > 0)).collect();
    let excluded: Vec<usize> = (0..Need::COUNT).filter(|l| !present.contains(l)).collect();
    if !excluded.is_empty() {
        log::warn!("fold {}: labels {excluded:?} absent from training, excluded", corpus.dataset.profiles()[test].id);
    }
    let y = DMatrix::from_fn(present.len(), train_idx.len(), |r, c| labels[(present[r], train_idx[c])]);
    let mut result = FoldResult { outcomes: Vec::new(), traces: Vec::new() };
    for &space in spaces {
        let (x, _) = feature_matrix(corpus, fit, space, cfg)?;
        let standardizer = Standardizer::fit(&x, &train_idx);
        let data = TrainingData::new(standardizer.apply(&x, &train_idx), &y)?;
        let mut params = cfg.glocal();
        params.k = params.k.min(present.len());
        params.g = params.g.min(train_idx.len());
        let model = train(&data, &params)?;
        let pred = predict(&model, &standardizer.apply(&x, &[test]))?;
        let floor = pred.scores.min() - 1.0;
        let mut scores = vec![floor; Need::COUNT];
        let mut predicted = vec![-1i8; Need::COUNT];
        for (r, &l) in present.iter().enumerate() {
            scores[l] = pred.scores[(r, 0)];
            predicted[l] = pred.signs[(r, 0)];
        }
        result.outcomes.push(FoldOutcome {
            profile: corpus.dataset.profiles()[test].id.clone(),
            dim: x.nrows(),
            scores,
            predicted,
            excluded_labels: excluded.clone(),
            sweeps: model.sweeps,
            converged: model.converged,
        });
        result.traces.push(model.trace);
    }
    Ok(result)
}

fn summarize(corpus: &Corpus, space: FeatureSpace, folds: Vec<FoldOutcome>, example_trace: Vec<f64>) -> Result<SpaceReport> {
    let n = folds.len();
    let truth = corpus.dataset.label_matrix().clone();
    let scores = DMatrix::from_fn(Need::COUNT, n, |l, j| folds[j].scores[l]);
    let predicted = DMatrix::from_fn(Need::COUNT, n, |l, j| folds[j].predicted[l]);
    let pooled = evaluate(&MetricInput::new(scores, truth.clone(), predicted)?, Aggregation::MacroLabels);
    let mut per_fold: BTreeMap<Metric, Vec<f64>> = BTreeMap::new();
    for (j, f) in folds.iter().enumerate() {
        let input = MetricInput::new(
            DMatrix::from_column_slice(Need::COUNT, 1, &f.scores),
            truth.columns(j, 1).into_owned(),
            DMatrix::from_column_slice(Need::COUNT, 1, &f.predicted),
        )?;
        for (m, v) in evaluate(&input, Aggregation::Instances).values {
            per_fold.entry(m).or_default().push(v.value);
        }
    }
    let mut fold_mean = BTreeMap::new();
    let mut ci_half_width = BTreeMap::new();
    for (m, values) in per_fold {
        let (mean, half) = mean_ci(&values);
        fold_mean.insert(m, mean);
        if let Some(h) = half {
            ci_half_width.insert(m, h);
        }
    }
    let flagged_folds = folds.iter().filter(|f| !f.excluded_labels.is_empty()).map(|f| f.profile.clone()).collect();
    let dim = folds.first().map(|f| f.dim).ok_or_else(|| HarnessError::Empty { what: "fold list".into() })?;
    Ok(SpaceReport { space, dim, pooled, fold_mean, ci_half_width, n_folds: n, flagged_folds, folds, example_trace })
}

/// Mean and 95% Student-t half-width with `m - 1` degrees of freedom. The
/// half-width needs at least two values.
pub fn mean_ci(values: &[f64]) -> (f64, Option<f64>) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, None);
    }
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let t = StudentsT::new(0.0, 1.0, m - 1.0).expect("positive degrees of freedom").inverse_cdf(0.975);
    (mean, Some(t * sd / m.sqrt()))
}
