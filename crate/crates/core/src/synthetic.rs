//! Seeded synthetic verification scores for demos and directional tests.
//!
//! Each group draws genuine and impostor similarities from normal
//! distributions. An [`OcclusionEffect`] lowers genuine scores, raises
//! impostor scores and widens both spreads by group-specific amounts,
//! which is how occlusion degrades a verifier unevenly across groups.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::compositor::{
    Anchor, AssetImage, AssetLibrary, BitDepth, Category, ColorType, Landmark, LandmarkSet,
    OcclusionAsset, Point, Raster,
};
use crate::error::{Error, Result};
use crate::foir::{OcclusionMask, SaliencyMap};
use crate::io::AssetSidecar;
use crate::verification::{Decision, GroundTruth, PairRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupProfile {
    pub name: String,
    pub genuine_mean: f64,
    pub impostor_mean: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupShift {
    pub genuine_drop: f64,
    pub impostor_rise: f64,
    pub spread_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionEffect {
    /// One entry per group, in profile order.
    pub shifts: Vec<GroupShift>,
}

impl OcclusionEffect {
    /// The same effect with every shift multiplied by `severity`.
    /// `severity = 0` leaves scores untouched.
    pub fn scaled(&self, severity: f64) -> OcclusionEffect {
        OcclusionEffect {
            shifts: self
                .shifts
                .iter()
                .map(|s| GroupShift {
                    genuine_drop: s.genuine_drop * severity,
                    impostor_rise: s.impostor_rise * severity,
                    spread_scale: 1.0 + (s.spread_scale - 1.0) * severity,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub groups: Vec<GroupProfile>,
    pub genuine_per_group: usize,
    pub impostor_per_group: usize,
}

impl SyntheticConfig {
    /// Four groups with mildly different score distributions and 3000
    /// genuine plus 3000 impostor pairs each.
    pub fn four_groups() -> Self {
        let g = |name: &str, genuine_mean, impostor_mean| GroupProfile {
            name: name.into(),
            genuine_mean,
            impostor_mean,
            spread: 0.12,
        };
        SyntheticConfig {
            groups: vec![
                g("African", 0.53, 0.12),
                g("Asian", 0.55, 0.10),
                g("Caucasian", 0.58, 0.08),
                g("Indian", 0.56, 0.11),
            ],
            genuine_per_group: 3000,
            impostor_per_group: 3000,
        }
    }

    pub fn with_pairs_per_group(mut self, genuine: usize, impostor: usize) -> Self {
        self.genuine_per_group = genuine;
        self.impostor_per_group = impostor;
        self
    }
}

/// Occlusion that hits the first group hardest and the third least.
pub fn default_occlusion() -> OcclusionEffect {
    let s = |genuine_drop, impostor_rise| GroupShift {
        genuine_drop,
        impostor_rise,
        spread_scale: 1.25,
    };
    OcclusionEffect {
        shifts: vec![s(0.15, 0.05), s(0.11, 0.03), s(0.09, 0.01), s(0.12, 0.04)],
    }
}

/// Draws one dataset. Pair ids are `<group>-g<i>` and `<group>-i<i>`.
pub fn generate_pairs(
    config: &SyntheticConfig,
    effect: Option<&OcclusionEffect>,
    seed: u64,
) -> Result<Vec<PairRecord>> {
    if let Some(e) = effect {
        if e.shifts.len() != config.groups.len() {
            return Err(Error::InvalidInput(format!(
                "{} occlusion shifts for {} groups",
                e.shifts.len(),
                config.groups.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(
        config.groups.len() * (config.genuine_per_group + config.impostor_per_group),
    );
    for (i, g) in config.groups.iter().enumerate() {
        let shift = effect.map_or(
            GroupShift {
                genuine_drop: 0.0,
                impostor_rise: 0.0,
                spread_scale: 1.0,
            },
            |e| e.shifts[i],
        );
        let spread = g.spread * shift.spread_scale;
        let normal = |mean: f64| {
            Normal::new(mean, spread)
                .map_err(|e| Error::InvalidInput(format!("group `{}`: {e}", g.name)))
        };
        let genuine = normal(g.genuine_mean - shift.genuine_drop)?;
        let impostor = normal(g.impostor_mean + shift.impostor_rise)?;
        for k in 0..config.genuine_per_group {
            pairs.push(PairRecord::new(
                format!("{}-g{k}", g.name),
                genuine.sample(&mut rng),
                GroundTruth::Genuine,
                &g.name,
            ));
        }
        for k in 0..config.impostor_per_group {
            pairs.push(PairRecord::new(
                format!("{}-i{k}", g.name),
                impostor.sample(&mut rng),
                GroundTruth::Impostor,
                &g.name,
            ));
        }
    }
    Ok(pairs)
}

/// Deterministic pairs whose rates at `threshold` are exactly
/// `false_match / impostor` and `false_non_match / genuine`.
pub fn pairs_with_counts(
    group: &str,
    genuine: usize,
    impostor: usize,
    false_non_match: usize,
    false_match: usize,
    threshold: f64,
) -> Vec<PairRecord> {
    let mut pairs = Vec::with_capacity(genuine + impostor);
    for k in 0..genuine {
        let score = if k < false_non_match {
            threshold - 0.1
        } else {
            threshold + 0.1
        };
        pairs.push(PairRecord::new(
            format!("{group}-g{k}"),
            score,
            GroundTruth::Genuine,
            group,
        ));
    }
    for k in 0..impostor {
        let score = if k < false_match {
            threshold + 0.05
        } else {
            threshold - 0.05
        };
        pairs.push(PairRecord::new(
            format!("{group}-i{k}"),
            score,
            GroundTruth::Impostor,
            group,
        ));
    }
    pairs
}

/// Five-point landmarks of an aligned face, scaled from a 112x112 template.
pub fn demo_landmarks(width: usize, height: usize) -> LandmarkSet {
    let sx = width as f64 / 112.0;
    let sy = height as f64 / 112.0;
    let p = |x: f64, y: f64| Point::new(x * sx, y * sy);
    LandmarkSet {
        left_eye: p(38.3, 51.7),
        right_eye: p(73.5, 51.5),
        nose: p(56.0, 71.7),
        left_mouth: p(41.5, 92.4),
        right_mouth: p(70.7, 92.2),
    }
}

/// An 8-bit RGB face-like image: a lit oval on a darker background with
/// seeded per-pixel noise.
pub fn demo_face(width: usize, height: usize, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tone: [f64; 3] = [
        rng.random_range(120.0..220.0),
        rng.random_range(90.0..170.0),
        rng.random_range(70.0..140.0),
    ];
    let mut raster = Raster::filled(width, height, ColorType::Rgb, BitDepth::Eight, 0);
    let (cx, cy) = (width as f64 / 2.0, height as f64 * 0.55);
    let (rx, ry) = (width as f64 * 0.38, height as f64 * 0.48);
    for y in 0..height {
        for x in 0..width {
            let d = ((x as f64 - cx) / rx).powi(2) + ((y as f64 - cy) / ry).powi(2);
            let light = if d <= 1.0 { 1.0 - 0.3 * d } else { 0.25 };
            let px = raster.pixel_mut(x, y);
            for (c, t) in px.iter_mut().zip(tone) {
                let noise: f64 = rng.random_range(-6.0..6.0);
                *c = (t * light + noise).clamp(0.0, 255.0).round() as u16;
            }
        }
    }
    raster
}

fn shape_raster(
    width: usize,
    height: usize,
    color: [u16; 3],
    coverage: impl Fn(f64, f64) -> f64,
) -> Raster {
    let mut raster = Raster::filled(width, height, ColorType::Rgba, BitDepth::Eight, 0);
    for y in 0..height {
        for x in 0..width {
            let a = coverage(x as f64, y as f64).clamp(0.0, 1.0);
            let px = raster.pixel_mut(x, y);
            px[..3].copy_from_slice(&color);
            px[3] = (a * 255.0).round() as u16;
        }
    }
    raster
}

/// Coverage of an ellipse with a one-pixel soft edge.
fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| {
        let d = (((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2)).sqrt();
        (rx.min(ry) * (1.0 - d) + 0.5).clamp(0.0, 1.0)
    }
}

fn anchor(landmark: Landmark, at: [f64; 2]) -> Anchor {
    Anchor {
        landmark,
        offset: [0.0, 0.0],
        at,
    }
}

/// One procedurally drawn asset per category, as sidecar metadata plus an
/// RGBA raster.
pub fn demo_assets() -> Vec<(AssetSidecar, Raster)> {
    use Landmark::*;
    let sidecar = |id: &str, category, anchors| AssetSidecar {
        id: Some(id.into()),
        category,
        image: Some(format!("{id}.png")),
        anchors,
    };
    let lens_l = ellipse(16.0, 12.0, 11.0, 8.0);
    let lens_r = ellipse(48.0, 12.0, 11.0, 8.0);
    let sunglasses = shape_raster(64, 24, [20, 20, 25], move |x, y| {
        let bridge = if (27.0..=37.0).contains(&x) && (9.0..=12.0).contains(&y) {
            1.0
        } else {
            0.0
        };
        lens_l(x, y).max(lens_r(x, y)).max(bridge)
    });
    let mask = shape_raster(72, 60, [90, 150, 200], |x, y| {
        let top = 2.0;
        let side = ellipse(36.0, 22.0, 34.0, 36.0)(x, y);
        if y < top {
            0.0
        } else {
            side
        }
    });
    let hat = shape_raster(96, 40, [150, 40, 40], |x, y| {
        let crown = ellipse(48.0, 24.0, 34.0, 22.0)(x, y);
        let brim = if (30.0..=38.0).contains(&y) && (2.0..=93.0).contains(&x) {
            1.0
        } else {
            0.0
        };
        crown.max(brim)
    });
    let visor = shape_raster(80, 40, [230, 230, 235], |x, y| {
        if (2.0..=77.0).contains(&x) && (4.0..=30.0).contains(&y) {
            1.0
        } else {
            0.0
        }
    });

    let above = |landmark, at| Anchor {
        landmark,
        offset: [0.0, -1.0],
        at,
    };
    vec![
        (
            sidecar(
                "sunglasses",
                Category::Eyes,
                vec![
                    anchor(LeftEye, [16.0, 12.0]),
                    anchor(RightEye, [48.0, 12.0]),
                    anchor(Nose, [32.0, 30.3]),
                ],
            ),
            sunglasses,
        ),
        (
            sidecar(
                "face_mask",
                Category::LowerFace,
                vec![
                    anchor(Nose, [36.0, 8.0]),
                    anchor(LeftMouth, [15.0, 37.5]),
                    anchor(RightMouth, [57.0, 37.5]),
                ],
            ),
            mask,
        ),
        (
            sidecar(
                "hat",
                Category::TopOfHead,
                vec![
                    above(LeftEye, [30.0, 38.0]),
                    above(RightEye, [66.0, 38.0]),
                    above(Nose, [48.0, 58.6]),
                ],
            ),
            hat,
        ),
        (
            sidecar(
                "visor",
                Category::UpperFace,
                vec![
                    anchor(LeftEye, [22.0, 36.0]),
                    anchor(RightEye, [58.0, 36.0]),
                    anchor(Nose, [40.0, 56.6]),
                ],
            ),
            visor,
        ),
    ]
}

/// [`demo_assets`] as a ready-to-use library.
pub fn demo_library() -> Result<AssetLibrary> {
    let assets = demo_assets()
        .into_iter()
        .map(|(sidecar, raster)| {
            OcclusionAsset::new(
                sidecar.id.unwrap_or_default(),
                sidecar.category,
                AssetImage::from_raster(&raster)?,
                sidecar.anchors,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    AssetLibrary::new(assets)
}

/// A saliency map made of a few Gaussian blobs whose sign supports
/// `decision`. Each blob is centred on an occluded pixel with probability
/// `occlusion_affinity`, otherwise anywhere in the image, so the expected
/// FOIR grows with the affinity.
pub fn synthetic_saliency(
    mask: &OcclusionMask,
    decision: Decision,
    occlusion_affinity: f64,
    seed: u64,
) -> Result<SaliencyMap> {
    if !(0.0..=1.0).contains(&occlusion_affinity) {
        return Err(Error::InvalidInput(format!(
            "occlusion affinity {occlusion_affinity} is outside [0, 1]"
        )));
    }
    let (w, h) = (mask.width(), mask.height());
    let occluded: Vec<usize> = (0..w * h).filter(|&i| mask.pixels()[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sign = match decision {
        Decision::Match => 1.0,
        Decision::NonMatch => -1.0,
    };
    let radius = (w.min(h) as f64 / 10.0).max(1.0);
    let mut values = vec![0.0; w * h];
    for _ in 0..4 {
        let centre = if !occluded.is_empty() && rng.random_bool(occlusion_affinity) {
            occluded[rng.random_range(0..occluded.len())]
        } else {
            rng.random_range(0..w * h)
        };
        let (cx, cy) = ((centre % w) as f64, (centre / w) as f64);
        let weight: f64 = rng.random_range(0.5..1.0);
        for y in 0..h {
            for x in 0..w {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                values[y * w + x] += sign * weight * (-d2 / (2.0 * radius * radius)).exp();
            }
        }
    }
    // Weak opposite-signed background noise.
    for v in &mut values {
        *v -= sign * rng.random_range(0.0..0.05);
    }
    SaliencyMap::new(w, h, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::group_rates;

    #[test]
    fn generation_is_seeded() {
        let cfg = SyntheticConfig::four_groups().with_pairs_per_group(50, 40);
        let a = generate_pairs(&cfg, None, 3).unwrap();
        let b = generate_pairs(&cfg, None, 3).unwrap();
        let c = generate_pairs(&cfg, None, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 4 * 90);
    }

    #[test]
    fn occlusion_lowers_genuine_scores() {
        let cfg = SyntheticConfig::four_groups().with_pairs_per_group(500, 500);
        let base = generate_pairs(&cfg, None, 1).unwrap();
        let occ = generate_pairs(&cfg, Some(&default_occlusion()), 1).unwrap();
        let mean = |p: &[PairRecord], t| {
            let v: Vec<f64> = p
                .iter()
                .filter(|p| p.ground_truth == t)
                .map(|p| p.score)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(&occ, GroundTruth::Genuine) < mean(&base, GroundTruth::Genuine) - 0.05);
        assert!(mean(&occ, GroundTruth::Impostor) > mean(&base, GroundTruth::Impostor));
    }

    #[test]
    fn zero_severity_is_identity() {
        let cfg = SyntheticConfig::four_groups().with_pairs_per_group(20, 20);
        let none = generate_pairs(&cfg, None, 9).unwrap();
        let zero = generate_pairs(&cfg, Some(&default_occlusion().scaled(0.0)), 9).unwrap();
        assert_eq!(none, zero);
    }

    #[test]
    fn counted_pairs_hit_exact_rates() {
        let pairs = pairs_with_counts("A", 100, 100, 7, 8, 0.5);
        let r = &group_rates(&pairs, 0.5).unwrap()[0];
        assert_eq!(r.fnmr, 0.07);
        assert_eq!(r.fmr, 0.08);
    }

    #[test]
    fn demo_library_occludes_every_protocol_draw() {
        use crate::compositor::{apply_protocol, Protocol, DEFAULT_OPACITY_THRESHOLD};
        let library = demo_library().unwrap();
        library.check_complete().unwrap();
        let face = demo_face(112, 112, 1);
        let lm = demo_landmarks(112, 112);
        for seed in 0..40 {
            for protocol in [Protocol::P1, Protocol::P4] {
                let a = apply_protocol(
                    &face,
                    &lm,
                    protocol,
                    &library,
                    seed,
                    DEFAULT_OPACITY_THRESHOLD,
                )
                .unwrap();
                assert!(a.mask.count() > 50, "{:?}", a.provenance);
                assert!(a.warnings.is_empty());
            }
        }
    }

    #[test]
    fn saliency_affinity_raises_overlap() {
        use crate::foir::foir;
        let mut mask = OcclusionMask::empty(40, 40);
        for y in 0..12 {
            for x in 0..40 {
                mask.pixels_mut()[y * 40 + x] = true;
            }
        }
        let mean = |affinity| {
            (0..60)
                .map(|s| {
                    let map = synthetic_saliency(&mask, Decision::NonMatch, affinity, s).unwrap();
                    foir(&map, &mask, Decision::NonMatch, 0.6).unwrap().unwrap()
                })
                .sum::<f64>()
                / 60.0
        };
        assert!(mean(0.9) > mean(0.1) + 0.3);
    }

    #[test]
    fn mismatched_effect_rejected() {
        let cfg = SyntheticConfig::four_groups();
        let effect = OcclusionEffect { shifts: vec![] };
        assert!(generate_pairs(&cfg, Some(&effect), 0).is_err());
    }
}
