use serde::{Deserialize, Serialize};

use super::geometry::{Affine, Point};
use crate::error::{Error, Result};
use crate::foir::OcclusionMask;

pub const DEFAULT_OPACITY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColorType {
    Gray,
    GrayAlpha,
    Rgb,
    Rgba,
}

impl ColorType {
    pub fn channels(self) -> usize {
        match self {
            ColorType::Gray => 1,
            ColorType::GrayAlpha => 2,
            ColorType::Rgb => 3,
            ColorType::Rgba => 4,
        }
    }

    pub fn has_alpha(self) -> bool {
        matches!(self, ColorType::GrayAlpha | ColorType::Rgba)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }
}

/// Integer raster, interleaved channels, row-major from the top-left. Eight
/// and sixteen bit images share the `u16` sample storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub color: ColorType,
    pub depth: BitDepth,
    pub data: Vec<u16>,
}

impl Raster {
    pub fn new(
        width: usize,
        height: usize,
        color: ColorType,
        depth: BitDepth,
        data: Vec<u16>,
    ) -> Result<Self> {
        if data.len() != width * height * color.channels() {
            return Err(Error::Shape(format!(
                "{width}x{height} {color:?} raster needs {} samples, got {}",
                width * height * color.channels(),
                data.len()
            )));
        }
        let max = depth.max_value();
        if data.iter().any(|&v| v > max) {
            return Err(Error::InvalidInput(format!(
                "sample exceeds the {depth:?} range"
            )));
        }
        Ok(Raster {
            width,
            height,
            color,
            depth,
            data,
        })
    }

    pub fn filled(
        width: usize,
        height: usize,
        color: ColorType,
        depth: BitDepth,
        value: u16,
    ) -> Self {
        Raster {
            width,
            height,
            color,
            depth,
            data: vec![value; width * height * color.channels()],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u16] {
        let c = self.color.channels();
        let i = (y * self.width + x) * c;
        &self.data[i..i + c]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u16] {
        let c = self.color.channels();
        let i = (y * self.width + x) * c;
        &mut self.data[i..i + c]
    }
}

/// Occlusion artwork as straight (non-premultiplied) RGBA in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f32; 4]>,
}

impl AssetImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f32; 4]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} asset needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(AssetImage {
            width,
            height,
            pixels,
        })
    }

    /// Converts a raster with an alpha channel.
    pub fn from_raster(raster: &Raster) -> Result<Self> {
        if !raster.color.has_alpha() {
            return Err(Error::InvalidInput(
                "occlusion assets need an alpha channel".into(),
            ));
        }
        let max = raster.depth.max_value() as f32;
        let pixels = raster
            .data
            .chunks_exact(raster.color.channels())
            .map(|p| {
                let n = |v: u16| v as f32 / max;
                match p {
                    [g, a] => [n(*g), n(*g), n(*g), n(*a)],
                    [r, g, b, a] => [n(*r), n(*g), n(*b), n(*a)],
                    _ => unreachable!(),
                }
            })
            .collect();
        AssetImage::new(raster.width, raster.height, pixels)
    }

    fn premultiplied(&self, x: isize, y: isize) -> [f64; 4] {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            return [0.0; 4];
        }
        let [r, g, b, a] = self.pixels[y as usize * self.width + x as usize];
        let a = a as f64;
        [r as f64 * a, g as f64 * a, b as f64 * a, a]
    }

    /// Bilinear sample at asset coordinates with pixel centers on integers.
    /// Reads outside the asset are fully transparent. Returns premultiplied
    /// color and opacity.
    pub fn sample(&self, p: Point) -> [f64; 4] {
        let x0 = p.x.floor();
        let y0 = p.y.floor();
        let fx = p.x - x0;
        let fy = p.y - y0;
        let (x0, y0) = (x0 as isize, y0 as isize);
        let mut out = [0.0; 4];
        let taps = [
            (x0, y0, (1.0 - fx) * (1.0 - fy)),
            (x0 + 1, y0, fx * (1.0 - fy)),
            (x0, y0 + 1, (1.0 - fx) * fy),
            (x0 + 1, y0 + 1, fx * fy),
        ];
        for (x, y, w) in taps {
            if w == 0.0 {
                continue;
            }
            let s = self.premultiplied(x, y);
            for (o, v) in out.iter_mut().zip(s) {
                *o += w * v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    pub image: Raster,
    pub mask: OcclusionMask,
}

impl Composite {
    /// True when the warped asset covered no pixel above the threshold,
    /// for instance because the transform moved it outside the image.
    pub fn mask_is_empty(&self) -> bool {
        self.mask.is_empty()
    }
}

fn luminance(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// Warps `asset` into `image` with `transform` (asset to image coordinates)
/// and alpha-composites it.
///
/// Only pixels whose sampled opacity exceeds `opacity_threshold` are
/// touched, and exactly those pixels are set in the returned mask, so the
/// output equals the input wherever the mask is clear.
pub fn composite(
    image: &Raster,
    asset: &AssetImage,
    transform: &Affine,
    opacity_threshold: f64,
) -> Result<Composite> {
    if image.width == 0 || image.height == 0 {
        return Err(Error::InvalidInput("image is empty".into()));
    }
    if !(0.0..1.0).contains(&opacity_threshold) {
        return Err(Error::param(
            "opacity_threshold",
            format!("{opacity_threshold} is outside [0, 1)"),
        ));
    }
    let inverse = transform.inverse()?;
    let mut out = image.clone();
    let mut mask = OcclusionMask::empty(image.width, image.height);

    // Image-space bounding box of the asset, padded by one pixel for the
    // bilinear footprint.
    let corners = [
        Point::new(-1.0, -1.0),
        Point::new(asset.width as f64, -1.0),
        Point::new(-1.0, asset.height as f64),
        Point::new(asset.width as f64, asset.height as f64),
    ]
    .map(|c| transform.apply(c));
    let lo_x = corners
        .iter()
        .map(|p| p.x)
        .fold(f64::INFINITY, f64::min)
        .floor();
    let hi_x = corners
        .iter()
        .map(|p| p.x)
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil();
    let lo_y = corners
        .iter()
        .map(|p| p.y)
        .fold(f64::INFINITY, f64::min)
        .floor();
    let hi_y = corners
        .iter()
        .map(|p| p.y)
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil();
    let clip = |v: f64, n: usize| v.clamp(0.0, n as f64) as usize;
    let (x_start, x_end) = (clip(lo_x, image.width), clip(hi_x + 1.0, image.width));
    let (y_start, y_end) = (clip(lo_y, image.height), clip(hi_y + 1.0, image.height));

    let max = image.depth.max_value() as f64;
    for y in y_start..y_end {
        for x in x_start..x_end {
            let [pr, pg, pb, a] = asset.sample(inverse.apply(Point::new(x as f64, y as f64)));
            if a <= opacity_threshold {
                continue;
            }
            let px = out.pixel_mut(x, y);
            let over = |dst: u16, src_premul: f64| {
                let v = (dst as f64 / max) * (1.0 - a) + src_premul;
                (v.clamp(0.0, 1.0) * max).round() as u16
            };
            match image.color {
                ColorType::Gray | ColorType::GrayAlpha => {
                    px[0] = over(px[0], luminance(pr, pg, pb));
                }
                ColorType::Rgb | ColorType::Rgba => {
                    px[0] = over(px[0], pr);
                    px[1] = over(px[1], pg);
                    px[2] = over(px[2], pb);
                }
            }
            if image.color.has_alpha() {
                let last = px.len() - 1;
                px[last] = over(px[last], a);
            }
            mask.pixels_mut()[y * image.width + x] = true;
        }
    }
    Ok(Composite { image: out, mask })
}
