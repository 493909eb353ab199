//! On-disk dataset layout:
//!
//! ```text
//! <root>/profiles/<id>/meta.json        {"id","region","gender","labels":["survival",...]}
//! <root>/profiles/<id>/captions.json    [{"image","caption","hashtags":[...],"geo":null|{...}}]
//! <root>/profiles/<id>/images/*.png|jpg
//! <root>/profiles/<id>/tags/azure.json
//! <root>/profiles/<id>/tags/places.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{validate_dataset, Dataset};
use crate::error::{CoreError, Result};
use crate::imageio::{is_image_file, load_gray};
use crate::labels::GlasserLabelSet;
use crate::profile::{Caption, Gender, ProfileRecord, Region};

pub const PROFILES_DIR: &str = "profiles";

#[derive(Debug, Serialize, Deserialize)]
struct MetaFile {
    id: String,
    region: Region,
    #[serde(default)]
    gender: Gender,
    labels: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedImage {
    pub profile: String,
    pub image: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub profiles: usize,
    pub images: usize,
    pub captions: usize,
    pub excluded_images: Vec<ExcludedImage>,
    /// `(profile, image)` pairs for captions whose image is not listed.
    pub orphaned_captions: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

pub fn profiles_dir(root: &Path) -> PathBuf {
    root.join(PROFILES_DIR)
}

pub fn profile_dir(root: &Path, id: &str) -> PathBuf {
    profiles_dir(root).join(id)
}

pub fn image_path(root: &Path, id: &str, image: &str) -> PathBuf {
    profile_dir(root, id).join("images").join(image)
}

pub fn tags_path(root: &Path, id: &str, file: &str) -> PathBuf {
    profile_dir(root, id).join("tags").join(file)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = fs::read_dir(dir)
        .map_err(|e| CoreError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| CoreError::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CoreError::json(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CoreError::json(path, e))?;
    fs::write(path, text + "\n").map_err(|e| CoreError::io(path, e))
}

fn load_profile(dir: &Path, report: &mut LoadReport) -> Result<ProfileRecord> {
    let dir_name = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    let meta_path = dir.join("meta.json");
    if !meta_path.is_file() {
        return Err(CoreError::MissingMeta { profile: dir_name, path: meta_path });
    }
    let meta: MetaFile = read_json(&meta_path)?;
    if meta.id != dir_name {
        return Err(CoreError::InvalidProfile {
            profile: dir_name,
            message: format!("meta id {:?} does not match directory name", meta.id),
        });
    }
    let labels = GlasserLabelSet::from_names(&meta.labels).map_err(|e| CoreError::InvalidProfile {
        profile: meta.id.clone(),
        message: e.to_string(),
    })?;

    let mut image_refs = Vec::new();
    let images_dir = dir.join("images");
    if images_dir.is_dir() {
        for path in sorted_entries(&images_dir)? {
            if !path.is_file() || !is_image_file(&path) {
                continue;
            }
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            match load_gray(&path) {
                Ok(_) => image_refs.push(name),
                Err(e) => {
                    log::warn!("profile {}: excluding unreadable image {name}: {e}", meta.id);
                    report.excluded_images.push(ExcludedImage {
                        profile: meta.id.clone(),
                        image: name,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }

    let captions_path = dir.join("captions.json");
    let captions: Vec<Caption> = if captions_path.is_file() {
        read_json(&captions_path)?
    } else {
        report.warnings.push(format!("profile {}: no captions.json", meta.id));
        Vec::new()
    };

    let profile = ProfileRecord { id: meta.id, region: meta.region, gender: meta.gender, image_refs, captions, labels };
    for c in profile.orphaned_captions() {
        log::warn!("profile {}: caption references unlisted image {}", profile.id, c.image);
        report.orphaned_captions.push((profile.id.clone(), c.image.clone()));
    }
    Ok(profile)
}

/// Loads and validates a dataset directory.
///
/// Missing meta files, empty label sets and duplicate ids are hard errors;
/// unreadable images are excluded and orphaned captions flagged in the report.
pub fn load_dataset(root: &Path) -> Result<(Dataset, LoadReport)> {
    let dir = profiles_dir(root);
    if !dir.is_dir() {
        return Err(CoreError::io(&dir, std::io::Error::new(std::io::ErrorKind::NotFound, "profiles directory not found")));
    }
    let mut report = LoadReport::default();
    let mut profiles = Vec::new();
    for path in sorted_entries(&dir)? {
        if path.is_dir() {
            profiles.push(load_profile(&path, &mut report)?);
        }
    }
    let dataset = Dataset::new(profiles)?;
    let validation = validate_dataset(&dataset);
    if let Some(v) = validation.hard_violations().next() {
        return Err(CoreError::Validation(v.to_string()));
    }
    report.profiles = dataset.len();
    report.images = dataset.image_count();
    report.captions = dataset.caption_count();
    Ok((dataset, report))
}

/// Writes `meta.json` and `captions.json` for every profile and creates the
/// `images/` and `tags/` directories. Image and tag files are written by the
/// caller.
pub fn save_dataset(dataset: &Dataset, root: &Path) -> Result<()> {
    for p in dataset.profiles() {
        let dir = profile_dir(root, &p.id);
        for sub in ["images", "tags"] {
            let d = dir.join(sub);
            fs::create_dir_all(&d).map_err(|e| CoreError::io(&d, e))?;
        }
        let meta = MetaFile {
            id: p.id.clone(),
            region: p.region.clone(),
            gender: p.gender,
            labels: p.labels.names().into_iter().map(String::from).collect(),
        };
        write_json(&dir.join("meta.json"), &meta)?;
        write_json(&dir.join("captions.json"), &p.captions)?;
    }
    Ok(())
}
