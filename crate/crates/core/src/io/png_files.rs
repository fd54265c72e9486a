use std::io::Cursor;
use std::path::Path;

use crate::compositor::{BitDepth, ColorType, Raster};
use crate::error::{Error, Result};
use crate::foir::OcclusionMask;

const MASK_ON: u16 = 255;

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Format(format!("png: {e}"))
}

/// Decodes any PNG into a [`Raster`]. Palette and sub-byte images are
/// expanded to 8 bits; 16-bit images keep their depth.
pub fn decode_png(data: &[u8]) -> Result<Raster> {
    let mut decoder = png::Decoder::new(Cursor::new(data));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("png: image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(info.buffer_size());

    let color = match info.color_type {
        png::ColorType::Grayscale => ColorType::Gray,
        png::ColorType::GrayscaleAlpha => ColorType::GrayAlpha,
        png::ColorType::Rgb => ColorType::Rgb,
        png::ColorType::Rgba => ColorType::Rgba,
        png::ColorType::Indexed => {
            return Err(Error::Format("png: palette was not expanded".into()))
        }
    };
    let (width, height) = (info.width as usize, info.height as usize);
    let row_samples = width * color.channels();
    let (depth, bytes_per_sample) = match info.bit_depth {
        png::BitDepth::Sixteen => (BitDepth::Sixteen, 2),
        png::BitDepth::Eight => (BitDepth::Eight, 1),
        other => {
            return Err(Error::Format(format!(
                "png: unexpected bit depth {other:?}"
            )))
        }
    };
    let mut data = Vec::with_capacity(row_samples * height);
    for row in buf.chunks(info.line_size).take(height) {
        let row = &row[..row_samples * bytes_per_sample];
        match depth {
            BitDepth::Eight => data.extend(row.iter().map(|&b| u16::from(b))),
            BitDepth::Sixteen => data.extend(
                row.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]])),
            ),
        }
    }
    Raster::new(width, height, color, depth, data)
}

pub fn encode_png(raster: &Raster) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, raster.width as u32, raster.height as u32);
        encoder.set_color(match raster.color {
            ColorType::Gray => png::ColorType::Grayscale,
            ColorType::GrayAlpha => png::ColorType::GrayscaleAlpha,
            ColorType::Rgb => png::ColorType::Rgb,
            ColorType::Rgba => png::ColorType::Rgba,
        });
        let bytes: Vec<u8> = match raster.depth {
            BitDepth::Eight => {
                encoder.set_depth(png::BitDepth::Eight);
                raster.data.iter().map(|&v| v as u8).collect()
            }
            BitDepth::Sixteen => {
                encoder.set_depth(png::BitDepth::Sixteen);
                raster.data.iter().flat_map(|v| v.to_be_bytes()).collect()
            }
        };
        let mut writer = encoder.write_header().map_err(png_err)?;
        writer.write_image_data(&bytes).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}

pub fn read_png(path: &Path) -> Result<Raster> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(&data).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_png(path: &Path, raster: &Raster) -> Result<()> {
    super::write_atomic(path, &encode_png(raster)?)
}

/// Masks are 8-bit single-channel PNGs: 255 occluded, 0 clear. Values from
/// 128 up count as occluded.
pub fn decode_mask(data: &[u8]) -> Result<OcclusionMask> {
    let raster = decode_png(data)?;
    if raster.color != ColorType::Gray || raster.depth != BitDepth::Eight {
        return Err(Error::Format(format!(
            "mask must be 8-bit grayscale, got {:?} {:?}",
            raster.depth, raster.color
        )));
    }
    OcclusionMask::new(
        raster.width,
        raster.height,
        raster.data.iter().map(|&v| v >= 128).collect(),
    )
}

pub fn encode_mask(mask: &OcclusionMask) -> Result<Vec<u8>> {
    let data = mask
        .pixels()
        .iter()
        .map(|&o| if o { MASK_ON } else { 0 })
        .collect();
    encode_png(&Raster::new(
        mask.width(),
        mask.height(),
        ColorType::Gray,
        BitDepth::Eight,
        data,
    )?)
}

pub fn read_mask(path: &Path) -> Result<OcclusionMask> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_mask(&data).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_mask(path: &Path, mask: &OcclusionMask) -> Result<()> {
    super::write_atomic(path, &encode_mask(mask)?)
}
