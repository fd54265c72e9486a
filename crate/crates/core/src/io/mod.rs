//! File formats: pair and landmark CSVs, saliency PFMs, PNG rasters and
//! masks, and the occlusion asset library.

mod assets;
mod csv_files;
mod pfm;
mod png_files;

use std::io::Write;
use std::path::Path;

pub use assets::{load_asset, load_asset_library, AssetSidecar};
pub use csv_files::{
    read_landmarks, read_landmarks_file, read_pairs, read_pairs_file, read_saliency_manifest,
    write_landmarks, write_pairs, ManifestEntry, LANDMARKS_HEADER, MANIFEST_HEADER, PAIRS_HEADER,
};
pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use png_files::{
    decode_mask, decode_png, encode_mask, encode_png, read_mask, read_png, write_mask, write_png,
};

use crate::error::{Error, Result};

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
