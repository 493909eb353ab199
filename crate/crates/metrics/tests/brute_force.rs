mod oracle;

use nalgebra::DMatrix;
use needscope_metrics::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random L=5 instance with p ≤ 6 and coarse scores so ties are common.
fn random_case(rng: &mut ChaCha8Rng) -> (Scores, Signs, Signs) {
    let p = rng.random_range(1..=6);
    let levels = rng.random_range(2..=12) as f64;
    let scores = DMatrix::from_fn(5, p, |_, _| (rng.random::<f64>() * levels).floor() / levels - 0.5);
    let mut truth = DMatrix::from_fn(5, p, |_, _| if rng.random_bool(0.4) { 1i8 } else { -1 });
    for i in 0..p {
        if truth.column(i).iter().all(|&v| v == -1) {
            truth[(rng.random_range(0..5), i)] = 1;
        }
    }
    let pred = DMatrix::from_fn(5, p, |_, _| if rng.random_bool(0.5) { 1i8 } else { -1 });
    (scores, truth, pred)
}

fn agree(name: &str, got: Result<f64>, want: Option<f64>) {
    match (got, want) {
        (Ok(g), Some(w)) => assert!((g - w).abs() <= 1e-12, "{name}: {g} vs oracle {w}"),
        (Err(_), None) => {}
        (g, w) => panic!("{name}: implementation {g:?}, oracle {w:?}"),
    }
}

#[test]
fn all_metrics_match_exhaustive_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..500 {
        let (s, t, p) = random_case(&mut rng);
        agree("hl", hamming_loss(&t, &p), Some(oracle::hamming(&t, &p)));
        agree("jsc", jaccard_score(&t, &p), Some(oracle::jaccard(&t, &p)));
        agree("rkl", ranking_loss(&s, &t).map(|v| v.value), oracle::ranking_loss(&s, &t));
        agree("cvg", coverage(&s, &t).map(|v| v.value), oracle::coverage(&s, &t));
        agree("ap", average_precision(&s, &t, Aggregation::MacroLabels).map(|v| v.value), oracle::ap_macro(&s, &t));
        agree("ap/inst", average_precision(&s, &t, Aggregation::Instances).map(|v| v.value), oracle::ap_instances(&s, &t));
        agree("auc", auc(&s, &t, Aggregation::MacroLabels).map(|v| v.value), oracle::auc_macro(&s, &t));
        agree("auc/inst", auc(&s, &t, Aggregation::Instances).map(|v| v.value), oracle::auc_instances(&s, &t));
    }
}

#[test]
fn threshold_free_metrics_invariant_under_increasing_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let (s, t, _) = random_case(&mut rng);
        for transformed in [s.map(|x| 2.0 * x + 1.0), s.map(f64::exp)] {
            for (a, b) in [
                (ranking_loss(&s, &t), ranking_loss(&transformed, &t)),
                (coverage(&s, &t), coverage(&transformed, &t)),
                (average_precision(&s, &t, Aggregation::MacroLabels), average_precision(&transformed, &t, Aggregation::MacroLabels)),
                (auc_macro(&s, &t), auc_macro(&transformed, &t)),
            ] {
                match (a, b) {
                    (Ok(a), Ok(b)) => assert!((a.value - b.value).abs() < 1e-12),
                    (Err(_), Err(_)) => {}
                    other => panic!("{other:?}"),
                }
            }
        }
    }
}

#[test]
fn perfect_predictor_beats_label_permuted_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for _ in 0..200 {
        let n = 12;
        let mut truth = DMatrix::from_fn(5, n, |_, _| if rng.random_bool(0.4) { 1i8 } else { -1 });
        for i in 0..n {
            truth[(i % 5, i)] = 1;
        }
        let perfect_scores = truth.map(|v| v as f64);
        // rotating label rows breaks the correspondence with the truth
        let rotated = DMatrix::from_fn(5, n, |j, i| truth[((j + 1) % 5, i)]);
        if rotated == truth {
            continue;
        }
        let rotated_scores = rotated.map(|v| v as f64);
        let good = evaluate(&MetricInput::new(perfect_scores, truth.clone(), truth.clone()).unwrap(), Aggregation::MacroLabels);
        let bad = evaluate(&MetricInput::new(rotated_scores, truth.clone(), rotated).unwrap(), Aggregation::MacroLabels);
        for m in Metric::ALL {
            let (g, b) = (good.get(m).unwrap(), bad.get(m).unwrap());
            if m.higher_is_better() {
                assert!(g >= b, "{m}: {g} < {b}");
            } else {
                assert!(g <= b, "{m}: {g} > {b}");
            }
        }
        checked += 1;
    }
    assert!(checked > 150);
}
