use std::path::Path;

pub use image::GrayImage;

use crate::error::{CoreError, Result};

/// Decodes any supported image file to 8-bit luminance.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|source| CoreError::Image { path: path.to_path_buf(), source })?;
    Ok(img.into_luma8())
}

pub fn save_png(path: &Path, img: &GrayImage) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| CoreError::Image { path: path.to_path_buf(), source })
}

pub fn is_image_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}
