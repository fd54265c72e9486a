//! A self-contained demo dataset: faces, landmarks and assets for
//! `occlude`, baseline and occluded pair lists for `evaluate`, and saliency
//! maps with masks for the occluded failures for `foir`.

use std::fmt::Write as _;
use std::path::Path;

use occfair::compositor::{apply_protocol, derive_seed, Protocol, DEFAULT_OPACITY_THRESHOLD};
use occfair::foir::{classify_outcomes, Outcome};
use occfair::io::{write_atomic, write_landmarks, write_mask, write_pairs, write_pfm, write_png};
use occfair::synthetic::{
    default_occlusion, demo_assets, demo_face, demo_landmarks, demo_library, generate_pairs,
    synthetic_saliency, SyntheticConfig,
};
use occfair::verification::{optimize_threshold, CandidateGrid, PairRecord};

use crate::config::SynthArgs;
use crate::error::{input, Result};

const FACE_SIZE: usize = 112;
const SALIENCY_SIZE: usize = 56;

/// How strongly saliency gravitates to the occlusion, per group in
/// generator order, for false non-matches and false matches.
const FNM_AFFINITY: [f64; 4] = [0.75, 0.45, 0.55, 0.55];
const FM_AFFINITY: f64 = 0.35;

fn write_pairs_csv(path: &Path, pairs: &[PairRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_pairs(&mut buf, pairs)?;
    write_atomic(path, &buf)?;
    Ok(())
}

pub fn run(args: &SynthArgs) -> Result<()> {
    if args.pairs_per_group == 0 {
        return Err(input("--pairs-per-group must be positive"));
    }
    let out = &args.out;

    let mut rows = Vec::with_capacity(args.faces);
    for i in 0..args.faces {
        let id = format!("face_{i:03}");
        write_png(
            &out.join("images").join(format!("{id}.png")),
            &demo_face(FACE_SIZE, FACE_SIZE, derive_seed(args.seed, &id)),
        )?;
        rows.push((id, demo_landmarks(FACE_SIZE, FACE_SIZE)));
    }
    let mut buf = Vec::new();
    write_landmarks(&mut buf, &rows)?;
    write_atomic(&out.join("landmarks.csv"), &buf)?;

    for (sidecar, raster) in demo_assets() {
        let id = sidecar.id.clone().unwrap_or_default();
        write_png(&out.join("assets").join(format!("{id}.png")), &raster)?;
        let json = serde_json::to_vec_pretty(&sidecar).map_err(occfair::Error::from)?;
        write_atomic(&out.join("assets").join(format!("{id}.json")), &json)?;
    }

    let config = SyntheticConfig::four_groups()
        .with_pairs_per_group(args.pairs_per_group, args.pairs_per_group);
    let baseline = generate_pairs(&config, None, derive_seed(args.seed, "baseline"))?;
    let occluded = generate_pairs(
        &config,
        Some(&default_occlusion()),
        derive_seed(args.seed, "occluded"),
    )?;
    write_pairs_csv(&out.join("pairs_baseline.csv"), &baseline)?;
    write_pairs_csv(&out.join("pairs_occluded.csv"), &occluded)?;

    // Saliency is only needed for failures at the baseline operating point.
    let threshold = optimize_threshold(&baseline, &CandidateGrid::Midpoints)?.threshold;
    let library = demo_library()?;
    let landmarks = demo_landmarks(SALIENCY_SIZE, SALIENCY_SIZE);
    let mut manifest = String::from("pair_id,saliency,mask\n");
    let mut failures = 0;
    for record in classify_outcomes(&occluded, threshold)? {
        let affinity = match record.outcome {
            Outcome::FalseNonMatch => {
                let g = config
                    .groups
                    .iter()
                    .position(|g| g.name == record.group)
                    .unwrap_or(0);
                FNM_AFFINITY[g % FNM_AFFINITY.len()]
            }
            Outcome::FalseMatch => FM_AFFINITY,
            _ => continue,
        };
        let seed = derive_seed(args.seed, &record.pair_id);
        let probe = demo_face(SALIENCY_SIZE, SALIENCY_SIZE, seed);
        let artifact = apply_protocol(
            &probe,
            &landmarks,
            Protocol::P1,
            &library,
            seed,
            DEFAULT_OPACITY_THRESHOLD,
        )?;
        let map = synthetic_saliency(&artifact.mask, record.outcome.decision(), affinity, seed)?;
        let saliency_rel = format!("saliency/{}.pfm", record.pair_id);
        let mask_rel = format!("masks/{}_mask.png", record.pair_id);
        write_pfm(&out.join("foir").join(&saliency_rel), &map)?;
        write_mask(&out.join("foir").join(&mask_rel), &artifact.mask)?;
        let _ = writeln!(manifest, "{},{saliency_rel},{mask_rel}", record.pair_id);
        failures += 1;
    }
    write_atomic(&out.join("foir").join("manifest.csv"), manifest.as_bytes())?;

    println!(
        "wrote {} faces, {} baseline and {} occluded pairs, and saliency for {failures} failures to {}",
        args.faces,
        baseline.len(),
        occluded.len(),
        out.display()
    );
    Ok(())
}
