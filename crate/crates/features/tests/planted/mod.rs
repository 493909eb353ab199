//! Corpus with a planted co-occurrence. Shared with the acceptance suite.

use needscope_features::text::SkipGramParams;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `alpha` and `beta` appear together in every topical sentence next to the
/// same topic words; `gamma` only appears among random fillers.
pub fn corpus(seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fillers: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let topic: Vec<String> = (0..4).map(|i| format!("t{i}")).collect();
    let mut out = Vec::new();
    for _ in 0..300 {
        let mut core = vec!["alpha".to_string(), "beta".to_string()];
        core.extend(topic.choose_multiple(&mut rng, 2).cloned());
        core.shuffle(&mut rng);
        let mut s: Vec<String> = (0..3).map(|_| fillers.choose(&mut rng).unwrap().clone()).collect();
        s.extend(core);
        s.extend((0..3).map(|_| fillers.choose(&mut rng).unwrap().clone()));
        out.push(s);
        if rng.random_bool(0.5) {
            let mut g: Vec<String> = (0..7).map(|_| fillers.choose(&mut rng).unwrap().clone()).collect();
            g.insert(rng.random_range(0..8), "gamma".into());
            out.push(g);
        }
    }
    out
}

pub fn params() -> SkipGramParams {
    SkipGramParams { dim: 32, window: 2, epochs: 8, min_count: 1, seed: 9, loss_pairs: usize::MAX, ..Default::default() }
}
