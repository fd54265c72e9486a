use occfair::compositor::{apply_protocol, derive_seed, OcclusionChoice, Protocol};
use occfair::io::{load_asset_library, read_landmarks_file, read_png, write_mask, write_png};
use serde::Serialize;

use super::prepare_out;
use crate::config::RunConfig;
use crate::error::{input, Result};
use crate::manifest::write_manifest;

#[derive(Debug, Serialize)]
struct ArtifactRecord {
    image_id: String,
    image: String,
    mask: String,
    seed: u64,
    occlusions: Vec<OcclusionChoice>,
    occluded_pixels: usize,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct OccludeDetails {
    protocol: Protocol,
    opacity_threshold: f64,
    artifacts: Vec<ArtifactRecord>,
}

fn check_id(id: &str) -> Result<()> {
    let bad = id.is_empty()
        || id.starts_with('.')
        || id.contains(['/', '\\'])
        || id.chars().any(char::is_control);
    if bad {
        return Err(input(format!(
            "image id `{id}` cannot be used as a file name"
        )));
    }
    Ok(())
}

pub fn run(config: &RunConfig) -> Result<()> {
    let (Some(images), Some(landmarks), Some(assets)) =
        (&config.images, &config.landmarks, &config.assets)
    else {
        unreachable!("validated by RunConfig");
    };
    let rows = read_landmarks_file(landmarks)?;
    let library = load_asset_library(assets)?;
    library.check_complete()?;
    for (id, _) in &rows {
        check_id(id)?;
        let path = images.join(format!("{id}.png"));
        if !path.is_file() {
            return Err(input(format!(
                "image for `{id}` not found at {}",
                path.display()
            )));
        }
    }

    let out = prepare_out(config)?;
    let mut artifacts = Vec::with_capacity(rows.len());
    let mut outputs = Vec::with_capacity(2 * rows.len());
    for (id, landmarks) in &rows {
        let image = read_png(&images.join(format!("{id}.png")))?;
        let (landmarks, moved) = landmarks.clamped(image.width, image.height);
        let seed = derive_seed(config.seed, id);
        let artifact = apply_protocol(
            &image,
            &landmarks,
            config.protocol,
            &library,
            seed,
            config.opacity_threshold,
        )?;
        let mut warnings: Vec<String> = moved
            .iter()
            .map(|lm| format!("landmark {lm:?} was clamped into the image"))
            .collect();
        warnings.extend(artifact.warnings.iter().cloned());
        for w in &warnings {
            eprintln!("warning: {id}: {w}");
        }

        let image_rel = format!("images/{id}.png");
        let mask_rel = format!("masks/{id}_mask.png");
        write_png(&out.join(&image_rel), &artifact.image)?;
        write_mask(&out.join(&mask_rel), &artifact.mask)?;
        outputs.push(image_rel.clone());
        outputs.push(mask_rel.clone());
        artifacts.push(ArtifactRecord {
            image_id: id.clone(),
            image: image_rel,
            mask: mask_rel,
            seed,
            occlusions: artifact.provenance.occlusions,
            occluded_pixels: artifact.mask.count(),
            warnings,
        });
    }

    println!(
        "occluded {} image(s) with protocol {} into {}",
        artifacts.len(),
        match config.protocol {
            Protocol::P1 => 1,
            Protocol::P4 => 4,
        },
        out.display()
    );
    write_manifest(
        config,
        outputs,
        OccludeDetails {
            protocol: config.protocol,
            opacity_threshold: config.opacity_threshold,
            artifacts,
        },
    )
}
