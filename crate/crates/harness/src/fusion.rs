//! Early fusion: per-block unit-L2 scaling, then concatenation in the fixed
//! order BoVW, Places, Azure, Text.

use std::collections::BTreeMap;

use needscope_core::{FeatureSpace, FeatureVector};

use crate::error::{HarnessError, Result};

/// Fuses the `blocks` of one profile. Blocks are taken in fusion order
/// whatever order `blocks` lists them in; a zero block stays zero and marks
/// the result degenerate.
pub fn fuse(profile: &str, vectors: &BTreeMap<FeatureSpace, FeatureVector>, blocks: &[FeatureSpace]) -> Result<FeatureVector> {
    let mut values = Vec::new();
    let mut degenerate = false;
    for space in FeatureSpace::FUSION_ORDER.into_iter().filter(|s| blocks.contains(s)) {
        let v = vectors
            .get(&space)
            .ok_or_else(|| HarnessError::MissingSpace { profile: profile.to_string(), space: space.to_string() })?;
        let norm = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
        degenerate |= v.degenerate || norm == 0.0;
        if norm > 0.0 {
            values.extend(v.values.iter().map(|x| x / norm));
        } else {
            values.extend(std::iter::repeat_n(0.0, v.dim()));
        }
    }
    Ok(FeatureVector { space: FeatureSpace::Fusion, values, degenerate })
}
