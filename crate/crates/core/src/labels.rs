//! The five Glasser needs and non-empty subsets of them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoreError, Result};

/// One of the five needs. The discriminant is the fixed row index used in
/// every label matrix: survival, belonging, power, freedom, fun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Need {
    Survival = 0,
    Belonging = 1,
    Power = 2,
    Freedom = 3,
    Fun = 4,
}

impl Need {
    pub const COUNT: usize = 5;
    pub const ALL: [Need; 5] = [Need::Survival, Need::Belonging, Need::Power, Need::Freedom, Need::Fun];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Need> {
        Need::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Need::Survival => "survival",
            Need::Belonging => "belonging",
            Need::Power => "power",
            Need::Freedom => "freedom",
            Need::Fun => "fun",
        }
    }
}

impl fmt::Display for Need {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Need {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Need::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| CoreError::UnknownLabel(s.to_string()))
    }
}

/// A non-empty subset of the five needs.
///
/// Textual form is a 5-character bit string in [`Need::ALL`] order, e.g.
/// `"00001"` for `{fun}`. This is also the serde representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlasserLabelSet {
    flags: [bool; Need::COUNT],
}

impl GlasserLabelSet {
    pub fn new(flags: [bool; Need::COUNT]) -> Result<Self> {
        if flags.iter().any(|&f| f) {
            Ok(GlasserLabelSet { flags })
        } else {
            Err(CoreError::EmptyLabelSet)
        }
    }

    pub fn from_needs<I: IntoIterator<Item = Need>>(needs: I) -> Result<Self> {
        let mut flags = [false; Need::COUNT];
        for n in needs {
            flags[n.index()] = true;
        }
        Self::new(flags)
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let needs = names.iter().map(|s| s.as_ref().parse::<Need>()).collect::<Result<Vec<_>>>()?;
        Self::from_needs(needs)
    }

    /// Decode the 5-bit mask `bits` (bit `i` set means `Need::ALL[i]`).
    pub fn from_mask(mask: u8) -> Result<Self> {
        let mut flags = [false; Need::COUNT];
        for (i, f) in flags.iter_mut().enumerate() {
            *f = mask & (1 << i) != 0;
        }
        if mask >> Need::COUNT != 0 {
            return Err(CoreError::BadLabelBits(format!("{mask:#b}")));
        }
        Self::new(flags)
    }

    pub fn mask(&self) -> u8 {
        self.flags.iter().enumerate().fold(0u8, |m, (i, &f)| if f { m | (1 << i) } else { m })
    }

    /// All 31 non-empty subsets, ordered by mask.
    pub fn all() -> impl Iterator<Item = GlasserLabelSet> {
        (1u8..32).map(|m| GlasserLabelSet::from_mask(m).expect("non-empty mask"))
    }

    pub fn flags(&self) -> [bool; Need::COUNT] {
        self.flags
    }

    pub fn contains(&self, need: Need) -> bool {
        self.flags[need.index()]
    }

    pub fn len(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn needs(&self) -> impl Iterator<Item = Need> + '_ {
        Need::ALL.into_iter().filter(|n| self.contains(*n))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.needs().map(Need::as_str).collect()
    }

    /// Column of the `{-1, +1}` label matrix for this set.
    pub fn signs(&self) -> [i8; Need::COUNT] {
        self.flags.map(|f| if f { 1 } else { -1 })
    }
}

impl fmt::Display for GlasserLabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &flag in &self.flags {
            f.write_str(if flag { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for GlasserLabelSet {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        if bytes.len() != Need::COUNT {
            return Err(CoreError::BadLabelBits(s.to_string()));
        }
        let mut flags = [false; Need::COUNT];
        for (f, b) in flags.iter_mut().zip(bytes) {
            *f = match b {
                b'0' => false,
                b'1' => true,
                _ => return Err(CoreError::BadLabelBits(s.to_string())),
            };
        }
        Self::new(flags)
    }
}

impl Serialize for GlasserLabelSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GlasserLabelSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_set_rejected() {
        assert!(matches!(GlasserLabelSet::new([false; 5]), Err(CoreError::EmptyLabelSet)));
        assert!(GlasserLabelSet::from_names::<&str>(&[]).is_err());
        assert!("00000".parse::<GlasserLabelSet>().is_err());
    }

    #[test]
    fn fixed_order() {
        let fun = GlasserLabelSet::from_names(&["fun"]).unwrap();
        assert_eq!(fun.to_string(), "00001");
        assert_eq!(fun.signs(), [-1, -1, -1, -1, 1]);
        let all = GlasserLabelSet::from_needs(Need::ALL).unwrap();
        assert_eq!(all.to_string(), "11111");
        assert_eq!(all.names(), vec!["survival", "belonging", "power", "freedom", "fun"]);
    }

    #[test]
    fn bit_strings_round_trip_for_all_31_sets() {
        let sets: Vec<_> = GlasserLabelSet::all().collect();
        assert_eq!(sets.len(), 31);
        for set in sets {
            let s = set.to_string();
            assert_eq!(s.parse::<GlasserLabelSet>().unwrap(), set);
            let json = serde_json::to_string(&set).unwrap();
            assert_eq!(serde_json::from_str::<GlasserLabelSet>(&json).unwrap(), set);
            assert_eq!(GlasserLabelSet::from_mask(set.mask()).unwrap(), set);
        }
    }

    #[test]
    fn malformed_strings() {
        for bad in ["0001", "000010", "0a001", "11 11"] {
            assert!(bad.parse::<GlasserLabelSet>().is_err(), "{bad}");
        }
        assert!("joy".parse::<Need>().is_err());
    }
}
