use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{fit_affine, Affine, Landmark, LandmarkSet, Point};
use super::raster::{composite, AssetImage, Raster};
use crate::error::{Error, Result};
use crate::foir::OcclusionMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    UpperFace,
    LowerFace,
    Eyes,
    TopOfHead,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::UpperFace,
        Category::LowerFace,
        Category::Eyes,
        Category::TopOfHead,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::UpperFace => "upper_face",
            Category::LowerFace => "lower_face",
            Category::Eyes => "eyes",
            Category::TopOfHead => "top_of_head",
        }
    }
}

impl std::str::FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown occlusion category `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "1")]
    P1,
    #[serde(rename = "4")]
    P4,
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "p1" | "P1" => Ok(Protocol::P1),
            "4" | "p4" | "P4" => Ok(Protocol::P4),
            _ => Err(Error::param("protocol", format!("`{s}` is not 1 or 4"))),
        }
    }
}

/// Two-occlusion combinations allowed by protocol 4, in composition order.
pub const P4_PAIRS: [[Category; 2]; 4] = [
    [Category::LowerFace, Category::Eyes],
    [Category::LowerFace, Category::TopOfHead],
    [Category::TopOfHead, Category::UpperFace],
    [Category::TopOfHead, Category::Eyes],
];

pub fn is_legal_combination(protocol: Protocol, categories: &[Category]) -> bool {
    match (protocol, categories) {
        (_, [_]) => true,
        (Protocol::P4, [a, b]) => P4_PAIRS
            .iter()
            .any(|[x, y]| (a, b) == (x, y) || (a, b) == (y, x)),
        _ => false,
    }
}

/// One asset point bound to a landmark. The target is the landmark moved by
/// `offset` inter-ocular distances, which lets top-of-head assets anchor
/// above the eyes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub landmark: Landmark,
    #[serde(default)]
    pub offset: [f64; 2],
    pub at: [f64; 2],
}

impl Anchor {
    pub fn target(&self, landmarks: &LandmarkSet) -> Point {
        let p = landmarks.get(self.landmark);
        let iod = landmarks.inter_ocular();
        Point::new(p.x + self.offset[0] * iod, p.y + self.offset[1] * iod)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionAsset {
    pub id: String,
    pub category: Category,
    pub image: AssetImage,
    pub anchors: Vec<Anchor>,
}

impl OcclusionAsset {
    pub fn new(
        id: impl Into<String>,
        category: Category,
        image: AssetImage,
        anchors: Vec<Anchor>,
    ) -> Result<Self> {
        let id = id.into();
        let points: Vec<Point> = anchors.iter().map(|a| Point::from(a.at)).collect();
        fit_affine(&points, &points)
            .map_err(|e| Error::InvalidInput(format!("asset `{id}`: {e}")))?;
        Ok(OcclusionAsset {
            id,
            category,
            image,
            anchors,
        })
    }

    pub fn transform_for(&self, landmarks: &LandmarkSet) -> Result<Affine> {
        let src: Vec<Point> = self.anchors.iter().map(|a| Point::from(a.at)).collect();
        let dst: Vec<Point> = self.anchors.iter().map(|a| a.target(landmarks)).collect();
        fit_affine(&src, &dst)
    }
}

#[derive(Debug, Clone, Default)]
pub struct AssetLibrary {
    assets: Vec<OcclusionAsset>,
}

impl AssetLibrary {
    /// Assets are kept sorted by id so selection does not depend on load
    /// order.
    pub fn new(mut assets: Vec<OcclusionAsset>) -> Result<Self> {
        assets.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = assets.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidInput(format!(
                "duplicate asset id `{}`",
                w[0].id
            )));
        }
        Ok(AssetLibrary { assets })
    }

    pub fn in_category(&self, category: Category) -> Vec<&OcclusionAsset> {
        self.assets
            .iter()
            .filter(|a| a.category == category)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn check_complete(&self) -> Result<()> {
        for c in Category::ALL {
            if self.in_category(c).is_empty() {
                return Err(Error::MissingAsset(c.name().into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OcclusionChoice {
    pub category: Category,
    pub asset_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub protocol: Protocol,
    pub occlusions: Vec<OcclusionChoice>,
    pub seed: u64,
    pub opacity_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionArtifact {
    pub image: Raster,
    pub mask: OcclusionMask,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

/// Mixes a run seed with an image id into an independent per-image seed, so
/// batch results do not depend on processing order.
pub fn derive_seed(global_seed: u64, image_id: &str) -> u64 {
    // FNV-1a over the id, then a splitmix64 finalizer over the combination.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in image_id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = global_seed ^ h.rotate_left(17);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws the occlusion categories for one artifact.
pub fn choose_categories<R: Rng>(protocol: Protocol, rng: &mut R) -> Vec<Category> {
    let single = |rng: &mut R| vec![Category::ALL[rng.random_range(0..Category::ALL.len())]];
    match protocol {
        Protocol::P1 => single(rng),
        Protocol::P4 => {
            // Option 0 is a single occlusion as in protocol 1.
            let option = rng.random_range(0..=P4_PAIRS.len());
            if option == 0 {
                single(rng)
            } else {
                P4_PAIRS[option - 1].to_vec()
            }
        }
    }
}

/// Draws categories and assets for one artifact from `seed`.
pub fn select_occlusions(
    protocol: Protocol,
    library: &AssetLibrary,
    seed: u64,
) -> Result<Vec<&OcclusionAsset>> {
    library.check_complete()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    choose_categories(protocol, &mut rng)
        .into_iter()
        .map(|c| {
            let pool = library.in_category(c);
            Ok(pool[rng.random_range(0..pool.len())])
        })
        .collect()
}

pub fn apply_protocol(
    image: &Raster,
    landmarks: &LandmarkSet,
    protocol: Protocol,
    library: &AssetLibrary,
    seed: u64,
    opacity_threshold: f64,
) -> Result<OcclusionArtifact> {
    landmarks.validate(image.width, image.height)?;
    let chosen = select_occlusions(protocol, library, seed)?;

    let mut current = image.clone();
    let mut mask = OcclusionMask::empty(image.width, image.height);
    let mut warnings = Vec::new();
    for asset in &chosen {
        let transform = asset.transform_for(landmarks)?;
        let step = composite(&current, &asset.image, &transform, opacity_threshold)?;
        if step.mask_is_empty() {
            warnings.push(format!(
                "asset `{}` covers no pixel above the opacity threshold",
                asset.id
            ));
        }
        mask.union_with(&step.mask)?;
        current = step.image;
    }

    Ok(OcclusionArtifact {
        image: current,
        mask,
        provenance: Provenance {
            protocol,
            occlusions: chosen
                .iter()
                .map(|a| OcclusionChoice {
                    category: a.category,
                    asset_id: a.id.clone(),
                })
                .collect(),
            seed,
            opacity_threshold,
        },
        warnings,
    })
}
