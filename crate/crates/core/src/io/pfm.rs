//! Grayscale portable float maps (`Pf`).
//!
//! The header is `Pf\n<width> <height>\n<scale>\n`; a negative scale marks
//! little-endian samples. Rows are stored bottom to top, and are flipped so
//! that [`SaliencyMap`] stays row-major from the top-left.

use std::path::Path;

use crate::error::{Error, Result};
use crate::foir::SaliencyMap;

fn header_token<'a>(data: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    while *pos < data.len() && data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated PFM header".into()));
    }
    std::str::from_utf8(&data[start..*pos])
        .map_err(|_| Error::Format("PFM header is not ASCII".into()))
}

pub fn decode_pfm(data: &[u8]) -> Result<SaliencyMap> {
    let mut pos = 0;
    match header_token(data, &mut pos)? {
        "Pf" => {}
        "PF" => {
            return Err(Error::Format(
                "color PFM given, saliency maps must be grayscale".into(),
            ))
        }
        other => return Err(Error::Format(format!("bad PFM magic `{other}`"))),
    }
    let width: usize = header_token(data, &mut pos)?
        .parse()
        .map_err(|_| Error::Format("bad PFM width".into()))?;
    let height: usize = header_token(data, &mut pos)?
        .parse()
        .map_err(|_| Error::Format("bad PFM height".into()))?;
    let scale: f32 = header_token(data, &mut pos)?
        .parse()
        .map_err(|_| Error::Format("bad PFM scale".into()))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Format("PFM scale must be finite and nonzero".into()));
    }
    // Exactly one whitespace byte separates the header from the samples.
    pos += 1;
    let little_endian = scale < 0.0;
    let count = width * height;
    let body = data
        .get(pos..pos + 4 * count)
        .ok_or_else(|| Error::Format(format!("PFM body holds fewer than {count} samples")))?;

    let mut values = vec![0.0f64; count];
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let bytes = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        };
        let (file_row, x) = (i / width, i % width);
        values[(height - 1 - file_row) * width + x] = f64::from(v);
    }
    SaliencyMap::new(width, height, values)
}

/// Encodes as little-endian `Pf` with scale `-1.0`. Values are narrowed to
/// `f32`.
pub fn encode_pfm(map: &SaliencyMap) -> Vec<u8> {
    let (w, h) = (map.width(), map.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h);
    for row in (0..h).rev() {
        for &v in &map.values()[row * w..(row + 1) * w] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(path: &Path) -> Result<SaliencyMap> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&data).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_pfm(path: &Path, map: &SaliencyMap) -> Result<()> {
    super::write_atomic(path, &encode_pfm(map))
}
