use needscope::synth::empirical_correlation;
use needscope::{generate, SynthSpec};
use needscope_core::load_dataset;

#[test]
fn twenty_profiles_each_with_a_label() {
    let data = generate(&SynthSpec::default(), 7).unwrap();
    assert_eq!(data.dataset.len(), 20);
    assert!(data.dataset.profiles().iter().all(|p| !p.labels.is_empty()));
    assert_eq!(data.images.len(), 20 * SynthSpec::default().images_per_profile);
    assert!(data.objects.iter().chain(&data.scenes).all(|o| !o.is_empty()));
    assert!(data.dataset.profiles().iter().all(|p| p.captions.len() == SynthSpec::default().captions_per_profile));
}

#[test]
fn same_seed_same_data() {
    let spec = SynthSpec { n: 6, ..Default::default() };
    let (a, b) = (generate(&spec, 3).unwrap(), generate(&spec, 3).unwrap());
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.images, b.images);
    assert_eq!(a.objects, b.objects);
    assert_eq!(a.scenes, b.scenes);
    assert_eq!(a.truth, b.truth);
    assert_ne!(generate(&spec, 4).unwrap().dataset, a.dataset);
}

#[test]
fn written_dataset_loads_back_equal() {
    let data = generate(&SynthSpec { n: 5, ..Default::default() }, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write(dir.path()).unwrap();
    let (loaded, report) = load_dataset(dir.path()).unwrap();
    assert_eq!(loaded, data.dataset);
    assert!(report.excluded_images.is_empty() && report.orphaned_captions.is_empty());
    assert!(dir.path().join("truth.json").is_file() && dir.path().join("labels.csv").is_file());
}

#[test]
fn empirical_correlation_matches_planted() {
    let spec = SynthSpec { n: 2000, images_per_profile: 1, image_size: 96, motifs_per_image: 1, captions_per_profile: 1, ..Default::default() };
    let data = generate(&spec, 11).unwrap();
    let emp = empirical_correlation(data.dataset.label_matrix());
    let planted = data.truth.correlation;
    for a in 0..5 {
        for b in 0..5 {
            assert!((emp[a][b] - planted[a][b]).abs() <= 0.05, "({a},{b}): {} vs {}", emp[a][b], planted[a][b]);
        }
    }
    // the first two labels share a favouring class
    assert!(planted[0][1] > 0.0);
}
