use nalgebra::DMatrix;
use needscope_metrics::*;
use proptest::prelude::*;

/// Five labels, 1 to 6 instances, every instance with a positive label.
fn case() -> impl Strategy<Value = (Scores, Signs)> {
    (1usize..=6).prop_flat_map(|p| {
        (prop::collection::vec(-4i32..4, 5 * p), prop::collection::vec(any::<bool>(), 5 * p)).prop_map(move |(s, t)| {
            let scores = DMatrix::from_iterator(5, p, s.into_iter().map(|v| v as f64 / 4.0));
            let mut truth = DMatrix::from_iterator(5, p, t.into_iter().map(|b| if b { 1i8 } else { -1 }));
            for i in 0..p {
                if truth.column(i).iter().all(|&v| v == -1) {
                    truth[(i % 5, i)] = 1;
                }
            }
            (scores, truth)
        })
    })
}

fn value(r: Result<MetricValue>) -> Option<f64> {
    r.ok().map(|v| v.value)
}

proptest! {
    #[test]
    fn measures_stay_in_range((s, t) in case()) {
        let unit = |v: Option<f64>| v.is_none_or(|x| (0.0..=1.0).contains(&x));
        prop_assert!(unit(value(ranking_loss(&s, &t))));
        prop_assert!(unit(value(auc(&s, &t, Aggregation::MacroLabels))));
        prop_assert!(unit(value(average_precision(&s, &t, Aggregation::Instances))));
        prop_assert!(value(coverage(&s, &t)).is_none_or(|c| (0.0..=4.0).contains(&c)));
        prop_assert!((0.0..=1.0).contains(&hamming_loss(&t, &t).unwrap()));
    }

    #[test]
    fn ranking_measures_ignore_monotone_rescaling((s, t) in case(), a in 0.1f64..10.0, b in -3.0f64..3.0) {
        let moved = s.map(|v| a * v + b);
        prop_assert_eq!(value(ranking_loss(&s, &t)), value(ranking_loss(&moved, &t)));
        prop_assert_eq!(value(coverage(&s, &t)), value(coverage(&moved, &t)));
        prop_assert_eq!(value(auc(&s, &t, Aggregation::MacroLabels)), value(auc(&moved, &t, Aggregation::MacroLabels)));
    }

    #[test]
    fn perfect_scores_are_optimal((_, t) in case()) {
        let s = t.map(|v| v as f64);
        prop_assert!(value(ranking_loss(&s, &t)).is_none_or(|v| v == 0.0));
        prop_assert!(value(average_precision(&s, &t, Aggregation::Instances)).is_none_or(|v| v == 1.0));
        prop_assert_eq!(hamming_loss(&t, &t).unwrap(), 0.0);
        prop_assert_eq!(jaccard_score(&t, &t).unwrap(), 1.0);
    }
}
