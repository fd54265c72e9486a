//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Three operations are exposed: a fairness explorer over synthetic scores,
//! an important-pixel inspector for FOIR, and an occlusion preview. Images
//! cross the boundary as RGBA8 buffers and everything else as JSON strings.

use occfair::compositor::{
    apply_protocol, derive_seed, Protocol, Raster, DEFAULT_OPACITY_THRESHOLD,
};
use occfair::fairness::{compare_to_baseline, FairnessReport, MetricName};
use occfair::foir::{important_pixels, measure_foir, OcclusionMask, SaliencyMap};
use occfair::synthetic::{
    default_occlusion, demo_face, demo_landmarks, demo_library, generate_pairs, synthetic_saliency,
    SyntheticConfig,
};
use occfair::verification::{group_rates, optimize_threshold, CandidateGrid, Decision};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const FACE_SIZE: usize = 112;
const PAIRS_PER_GROUP: usize = 1000;

fn js_error(e: occfair::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// An RGBA8 image plus a JSON description.
#[wasm_bindgen]
pub struct Frame {
    width: usize,
    height: usize,
    rgba: Vec<u8>,
    info: String,
}

#[wasm_bindgen]
impl Frame {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }

    pub fn info(&self) -> String {
        self.info.clone()
    }
}

fn to_rgba(image: &Raster) -> Vec<u8> {
    let shift = if image.depth.max_value() > 255 { 8 } else { 0 };
    let mut out = Vec::with_capacity(image.width * image.height * 4);
    for y in 0..image.height {
        for x in 0..image.width {
            let p: Vec<u8> = image
                .pixel(x, y)
                .iter()
                .map(|v| (v >> shift) as u8)
                .collect();
            let rgba = match p.len() {
                1 => [p[0], p[0], p[0], 255],
                2 => [p[0], p[0], p[0], p[1]],
                3 => [p[0], p[1], p[2], 255],
                _ => [p[0], p[1], p[2], p[3]],
            };
            out.extend_from_slice(&rgba);
        }
    }
    out
}

pub fn fairness_json(severity: f64, alpha: f64, seed: u64) -> occfair::Result<Value> {
    let config =
        SyntheticConfig::four_groups().with_pairs_per_group(PAIRS_PER_GROUP, PAIRS_PER_GROUP);
    let effect = default_occlusion().scaled(severity);
    let baseline = generate_pairs(&config, None, derive_seed(seed, "baseline"))?;
    let occluded = generate_pairs(&config, Some(&effect), derive_seed(seed, "occluded"))?;
    let threshold = optimize_threshold(&baseline, &CandidateGrid::Midpoints)?.threshold;
    let base = FairnessReport::compute(threshold, &group_rates(&baseline, threshold)?, alpha)?;
    let occ = FairnessReport::compute(threshold, &group_rates(&occluded, threshold)?, alpha)?;
    let comparison = compare_to_baseline(&base, &occ)?;
    let groups = |r: &FairnessReport| -> Vec<Value> {
        r.groups
            .iter()
            .map(|g| json!({"group": g.group, "accuracy": 100.0 * g.accuracy, "fmr": g.fmr, "fnmr": g.fnmr}))
            .collect()
    };
    let metrics: Vec<Value> = MetricName::FAIRNESS
        .iter()
        .chain(MetricName::DISPERSION.iter())
        .filter_map(|m| comparison.get(*m))
        .map(|d| {
            json!({
                "metric": d.metric.label(),
                "baseline": d.baseline,
                "occluded": d.occluded,
                "percent_change": d.percent_change,
                "direction": d.direction,
            })
        })
        .collect();
    Ok(json!({
        "threshold": threshold,
        "baseline": groups(&base),
        "occluded": groups(&occ),
        "metrics": metrics,
    }))
}

/// Baseline and occluded fairness at a threshold optimized on the baseline.
/// `severity` scales the synthetic occlusion effect; 0 means no effect.
#[wasm_bindgen]
pub fn fairness_explorer(severity: f64, alpha: f64, seed: u32) -> Result<String, JsError> {
    Ok(fairness_json(severity, alpha, u64::from(seed))
        .map_err(js_error)?
        .to_string())
}

fn occluded_face(protocol: Protocol, seed: u64) -> occfair::Result<(Raster, OcclusionMask, Value)> {
    let face = demo_face(FACE_SIZE, FACE_SIZE, seed);
    let art = apply_protocol(
        &face,
        &demo_landmarks(FACE_SIZE, FACE_SIZE),
        protocol,
        &demo_library()?,
        derive_seed(seed, "occlusion"),
        DEFAULT_OPACITY_THRESHOLD,
    )?;
    let info = json!({
        "occlusions": art.provenance.occlusions,
        "occluded_pixels": art.mask.count(),
    });
    Ok((art.image, art.mask, info))
}

/// One occluded demo face. The info lists the chosen categories and assets.
#[wasm_bindgen]
pub fn occlusion_preview(protocol: u8, seed: u32) -> Result<Frame, JsError> {
    let protocol: Protocol = protocol.to_string().parse().map_err(js_error)?;
    let (image, _, info) = occluded_face(protocol, u64::from(seed)).map_err(js_error)?;
    Ok(Frame {
        width: image.width,
        height: image.height,
        rgba: to_rgba(&image),
        info: info.to_string(),
    })
}

/// Occluded face shaded with the occlusion (blue) and the important pixels
/// at `fraction` (red; magenta where they overlap).
pub fn foir_frame(
    fraction: f64,
    affinity: f64,
    false_match: bool,
    seed: u64,
) -> occfair::Result<Frame> {
    let (image, mask, mut info) = occluded_face(Protocol::P1, seed)?;
    let decision = if false_match {
        Decision::Match
    } else {
        Decision::NonMatch
    };
    let map: SaliencyMap =
        synthetic_saliency(&mask, decision, affinity, derive_seed(seed, "saliency"))?;
    let measured = measure_foir(&map, &mask, decision, fraction)?;
    let mut important = vec![false; mask.pixels().len()];
    for i in important_pixels(&map, decision, fraction)? {
        important[i] = true;
    }
    let mut rgba = to_rgba(&image);
    for (i, px) in rgba.chunks_exact_mut(4).enumerate() {
        let tint = match (important[i], mask.pixels()[i]) {
            (true, true) => Some([230, 40, 230]),
            (true, false) => Some([230, 40, 40]),
            (false, true) => Some([40, 90, 230]),
            (false, false) => None,
        };
        if let Some(t) = tint {
            for c in 0..3 {
                px[c] = ((u16::from(px[c]) + 2 * t[c]) / 3) as u8;
            }
        }
    }
    info["important_pixels"] = json!(measured.important);
    info["overlapping"] = json!(measured.overlapping);
    info["foir"] = json!(measured.ratio());
    Ok(Frame {
        width: image.width,
        height: image.height,
        rgba,
        info: info.to_string(),
    })
}

#[wasm_bindgen]
pub fn foir_inspector(
    fraction: f64,
    affinity: f64,
    false_match: bool,
    seed: u32,
) -> Result<Frame, JsError> {
    foir_frame(fraction, affinity, false_match, u64::from(seed)).map_err(js_error)
}
