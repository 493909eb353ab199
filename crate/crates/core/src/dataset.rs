use std::collections::{BTreeMap, HashSet};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::labels::{GlasserLabelSet, Need};
use crate::profile::{ProfileRecord, Region};

/// Labels × instances matrix with entries in `{-1, +1}`.
pub type LabelMatrix = DMatrix<i8>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    profiles: Vec<ProfileRecord>,
    label_matrix: LabelMatrix,
}

impl Dataset {
    /// Builds the dataset and its label matrix. Invariants other than
    /// non-emptiness are checked by [`validate_dataset`].
    pub fn new(profiles: Vec<ProfileRecord>) -> Result<Self> {
        let label_matrix = labels_to_matrix(&profiles)?;
        Ok(Dataset { profiles, label_matrix })
    }

    pub fn profiles(&self) -> &[ProfileRecord] {
        &self.profiles
    }

    pub fn label_matrix(&self) -> &LabelMatrix {
        &self.label_matrix
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profile(&self, id: &str) -> Option<&ProfileRecord> {
        self.profiles.iter().find(|p| p.id == id)
    }

    pub fn image_count(&self) -> usize {
        self.profiles.iter().map(|p| p.image_refs.len()).sum()
    }

    pub fn caption_count(&self) -> usize {
        self.profiles.iter().map(|p| p.captions.len()).sum()
    }

    /// Profile indices grouped by region, regions in sorted order.
    pub fn by_region(&self) -> BTreeMap<Region, Vec<usize>> {
        let mut out: BTreeMap<Region, Vec<usize>> = BTreeMap::new();
        for (i, p) in self.profiles.iter().enumerate() {
            out.entry(p.region.clone()).or_default().push(i);
        }
        out
    }

    /// Sub-dataset with the given profile indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(indices.iter().map(|&i| self.profiles[i].clone()).collect())
    }
}

/// Entry `(j, i)` is `+1` iff profile `i` carries need `j`.
pub fn labels_to_matrix(profiles: &[ProfileRecord]) -> Result<LabelMatrix> {
    if profiles.is_empty() {
        return Err(CoreError::NoProfiles);
    }
    let sets: Vec<GlasserLabelSet> = profiles.iter().map(|p| p.labels).collect();
    Ok(sets_to_matrix(&sets))
}

pub fn sets_to_matrix(sets: &[GlasserLabelSet]) -> LabelMatrix {
    DMatrix::from_fn(Need::COUNT, sets.len(), |j, i| sets[i].signs()[j])
}

/// Inverse of [`labels_to_matrix`]; fails on entries outside `{-1, +1}`,
/// wrong row count, or an all-negative column.
pub fn matrix_to_labels(matrix: &LabelMatrix) -> Result<Vec<GlasserLabelSet>> {
    if matrix.nrows() != Need::COUNT {
        return Err(CoreError::BadLabelMatrix);
    }
    matrix
        .column_iter()
        .map(|col| {
            let mut flags = [false; Need::COUNT];
            for (f, &v) in flags.iter_mut().zip(col.iter()) {
                *f = match v {
                    1 => true,
                    -1 => false,
                    _ => return Err(CoreError::BadLabelMatrix),
                };
            }
            GlasserLabelSet::new(flags).map_err(|_| CoreError::BadLabelMatrix)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateId { id: String },
    OrphanedCaption { profile: String, image: String },
    EmptyProfileId { index: usize },
    LabelMatrixMismatch { column: usize },
    AllNegativeColumn { column: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { id } => write!(f, "duplicate id {id:?}"),
            Violation::OrphanedCaption { profile, image } => {
                write!(f, "orphaned caption in {profile:?}: image {image:?} not listed")
            }
            Violation::EmptyProfileId { index } => write!(f, "profile #{index} has an empty id"),
            Violation::LabelMatrixMismatch { column } => {
                write!(f, "label matrix column {column} disagrees with the profile's labels")
            }
            Violation::AllNegativeColumn { column } => write!(f, "label matrix column {column} is all -1"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Violations other than orphaned captions, which are tolerated at load time.
    pub fn hard_violations(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| !matches!(v, Violation::OrphanedCaption { .. }))
    }
}

/// Lists every invariant violation in `d` without modifying it.
pub fn validate_dataset(d: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for (i, p) in d.profiles.iter().enumerate() {
        if p.id.is_empty() {
            violations.push(Violation::EmptyProfileId { index: i });
        }
        if !seen.insert(p.id.as_str()) {
            violations.push(Violation::DuplicateId { id: p.id.clone() });
        }
        for c in p.orphaned_captions() {
            violations.push(Violation::OrphanedCaption { profile: p.id.clone(), image: c.image.clone() });
        }
    }
    for (i, col) in d.label_matrix.column_iter().enumerate() {
        let expected = d.profiles.get(i).map(|p| p.labels.signs());
        if expected.is_none_or(|e| col.iter().ne(e.iter())) {
            violations.push(Violation::LabelMatrixMismatch { column: i });
        }
        if col.iter().all(|&v| v == -1) {
            violations.push(Violation::AllNegativeColumn { column: i });
        }
    }
    ValidationReport { violations }
}
