use std::fmt;

use serde::{Deserialize, Serialize};

use crate::labels::GlasserLabelSet;

/// Opaque region name. Only the text embeddings branch on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region(pub String);

impl Region {
    pub fn iran() -> Self {
        Region("iran".into())
    }

    pub fn spain() -> Self {
        Region("spain".into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Region {
    fn from(s: &str) -> Self {
        Region(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    #[default]
    Unknown,
}

/// One post caption. `image` names a file in the profile's `images/` directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caption {
    pub image: String,
    pub caption: String,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub geo: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub id: String,
    pub region: Region,
    pub gender: Gender,
    /// Image file names relative to `profiles/<id>/images/`, sorted.
    pub image_refs: Vec<String>,
    pub captions: Vec<Caption>,
    pub labels: GlasserLabelSet,
}

impl ProfileRecord {
    /// Captions whose image is not among `image_refs`.
    pub fn orphaned_captions(&self) -> impl Iterator<Item = &Caption> {
        self.captions.iter().filter(|c| !self.image_refs.iter().any(|r| r == &c.image))
    }
}
