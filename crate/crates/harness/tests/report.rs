use needscope::report::CSV_HEADER;
use needscope::{emit_report, generate, run_loso, Corpus, EvaluationReport, ExperimentConfig, SynthSpec};
use needscope_core::FeatureSpace;

fn report() -> EvaluationReport {
    let cfg = ExperimentConfig {
        spaces: vec![FeatureSpace::Places, FeatureSpace::Azure],
        glocal_max_sweeps: 40,
        ..Default::default()
    };
    let data = generate(&SynthSpec { n: 5, ..Default::default() }, 3).unwrap();
    run_loso(&Corpus::from_synth(&data, &cfg).unwrap(), &cfg).unwrap()
}

#[test]
fn json_round_trip_is_exact() {
    let r = report();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&r, dir.path(), false).unwrap();
    let json = files.iter().find(|p| p.extension().is_some_and(|e| e == "json")).unwrap();
    assert_eq!(EvaluationReport::load(json).unwrap(), r);
}

#[test]
fn csv_has_one_row_per_space() {
    let csv = report().to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].starts_with("places,") && lines[2].starts_with("azure,"));
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 14);
    }
}

#[test]
fn svg_plots_are_written_on_request() {
    let r = report();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&r, dir.path(), true).unwrap();
    for name in ["metrics.svg", "trace.svg"] {
        let path = dir.path().join(name);
        assert!(files.contains(&path));
        assert!(std::fs::read_to_string(path).unwrap().starts_with("<svg"));
    }
}
