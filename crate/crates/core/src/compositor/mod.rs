//! Protocol-driven synthesis of facial occlusions.
//!
//! Occlusion assets are affine-warped onto five facial landmarks and
//! alpha-composited over the face crop. Each artifact carries the binary
//! mask of the pixels the occlusion covers.

mod geometry;
mod protocol;
mod raster;

pub use geometry::{fit_affine, Affine, Landmark, LandmarkSet, Point, COLLINEARITY_TOLERANCE};
pub use protocol::{
    apply_protocol, choose_categories, derive_seed, is_legal_combination, select_occlusions,
    Anchor, AssetLibrary, Category, OcclusionArtifact, OcclusionAsset, OcclusionChoice, Protocol,
    Provenance, P4_PAIRS,
};
pub use raster::{
    composite, AssetImage, BitDepth, ColorType, Composite, Raster, DEFAULT_OPACITY_THRESHOLD,
};
