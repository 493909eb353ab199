use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Identity of a per-profile feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSpace {
    BoVW,
    Places,
    Azure,
    Text,
    Fusion,
}

impl FeatureSpace {
    /// Fusion concatenation order.
    pub const FUSION_ORDER: [FeatureSpace; 4] =
        [FeatureSpace::BoVW, FeatureSpace::Places, FeatureSpace::Azure, FeatureSpace::Text];

    pub fn default_dim(self) -> usize {
        match self {
            FeatureSpace::BoVW => 256,
            FeatureSpace::Places => 344,
            FeatureSpace::Azure => 734,
            FeatureSpace::Text => 128,
            FeatureSpace::Fusion => Self::FUSION_ORDER.iter().map(|s| s.default_dim()).sum(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSpace::BoVW => "bovw",
            FeatureSpace::Places => "places",
            FeatureSpace::Azure => "azure",
            FeatureSpace::Text => "text",
            FeatureSpace::Fusion => "fusion",
        }
    }
}

impl fmt::Display for FeatureSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSpace {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bovw" => Ok(FeatureSpace::BoVW),
            "places" | "places-cnn" | "scenes" => Ok(FeatureSpace::Places),
            "azure" | "objects" => Ok(FeatureSpace::Azure),
            "text" | "word2vec" => Ok(FeatureSpace::Text),
            "fusion" => Ok(FeatureSpace::Fusion),
            other => Err(CoreError::Validation(format!("unknown feature space {other:?}"))),
        }
    }
}

/// Dense per-profile feature vector.
///
/// `degenerate` marks vectors produced from no usable input (no descriptors,
/// no tags, no in-vocabulary tokens); such vectors are all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub space: FeatureSpace,
    pub values: Vec<f64>,
    #[serde(default)]
    pub degenerate: bool,
}

impl FeatureVector {
    pub fn new(space: FeatureSpace, values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { space: space.to_string(), index });
        }
        Ok(FeatureVector { space, values, degenerate: false })
    }

    pub fn degenerate(space: FeatureSpace, dim: usize) -> Self {
        FeatureVector { space, values: vec![0.0; dim], degenerate: true }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn expect_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(CoreError::DimensionMismatch { space: self.space.to_string(), expected, actual: self.dim() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dims() {
        assert_eq!(FeatureSpace::BoVW.default_dim(), 256);
        assert_eq!(FeatureSpace::Places.default_dim(), 344);
        assert_eq!(FeatureSpace::Azure.default_dim(), 734);
        assert_eq!(FeatureSpace::Text.default_dim(), 128);
        assert_eq!(FeatureSpace::Fusion.default_dim(), 1462);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(FeatureVector::new(FeatureSpace::Text, vec![0.0, f64::NAN]).is_err());
        assert!(FeatureVector::new(FeatureSpace::Text, vec![0.0, f64::INFINITY]).is_err());
        let v = FeatureVector::new(FeatureSpace::Text, vec![1.0; 3]).unwrap();
        assert!(v.expect_dim(3).is_ok());
        assert!(v.expect_dim(128).is_err());
    }

    #[test]
    fn space_names_parse() {
        for s in FeatureSpace::FUSION_ORDER.into_iter().chain([FeatureSpace::Fusion]) {
            assert_eq!(s.as_str().parse::<FeatureSpace>().unwrap(), s);
        }
    }
}
