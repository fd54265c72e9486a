//! Occlusion asset library on disk.
//!
//! Each asset is a PNG with an alpha channel plus a JSON sidecar:
//!
//! ```json
//! {
//!   "category": "eyes",
//!   "image": "sunglasses.png",
//!   "anchors": [
//!     { "landmark": "left_eye", "at": [31.0, 20.0] },
//!     { "landmark": "right_eye", "at": [97.0, 20.0] },
//!     { "landmark": "nose", "at": [64.0, 52.0] }
//!   ]
//! }
//! ```
//!
//! `id` defaults to the sidecar's file stem and `image` to `<stem>.png`. An
//! anchor's optional `offset` moves its landmark target by that many
//! inter-ocular distances.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::png_files::read_png;
use crate::compositor::{Anchor, AssetImage, AssetLibrary, Category, OcclusionAsset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssetSidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub category: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub anchors: Vec<Anchor>,
}

pub fn load_asset(sidecar_path: &Path) -> Result<OcclusionAsset> {
    let text = std::fs::read_to_string(sidecar_path).map_err(|e| Error::io(sidecar_path, e))?;
    let sidecar: AssetSidecar = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", sidecar_path.display())))?;
    let stem = sidecar_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    let dir = sidecar_path.parent().unwrap_or(Path::new("."));
    let image_path = dir.join(sidecar.image.unwrap_or_else(|| format!("{stem}.png")));
    let image = AssetImage::from_raster(&read_png(&image_path)?)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", image_path.display())))?;
    OcclusionAsset::new(
        sidecar.id.unwrap_or(stem),
        sidecar.category,
        image,
        sidecar.anchors,
    )
}

/// Loads every `*.json` sidecar in `dir`.
pub fn load_asset_library(dir: &Path) -> Result<AssetLibrary> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut sidecars = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            sidecars.push(path);
        }
    }
    sidecars.sort();
    let assets = sidecars
        .iter()
        .map(|p| load_asset(p))
        .collect::<Result<Vec<_>>>()?;
    AssetLibrary::new(assets)
}
