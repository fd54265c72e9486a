use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::compositor::{LandmarkSet, Point};
use crate::error::{Error, Result};
use crate::verification::{validate_pairs, GroundTruth, PairRecord};

pub const PAIRS_HEADER: [&str; 4] = ["pair_id", "score", "ground_truth", "group"];

pub const LANDMARKS_HEADER: [&str; 11] = [
    "image_id", "le_x", "le_y", "re_x", "re_y", "n_x", "n_y", "lm_x", "lm_y", "rm_x", "rm_y",
];

pub const MANIFEST_HEADER: [&str; 3] = ["pair_id", "saliency", "mask"];

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

struct Rows<R: Read> {
    reader: csv::Reader<R>,
    source: String,
}

impl<R: Read> Rows<R> {
    fn new(input: R, source: &str, header: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let found = reader.headers().map_err(|e| Error::Parse {
            path: source.into(),
            line: 1,
            message: e.to_string(),
        })?;
        let found: Vec<&str> = found.iter().collect();
        if found != header {
            return Err(Error::Parse {
                path: source.into(),
                line: 1,
                message: format!(
                    "expected header `{}`, found `{}`",
                    header.join(","),
                    found.join(",")
                ),
            });
        }
        Ok(Rows {
            reader,
            source: source.into(),
        })
    }

    fn for_each(
        mut self,
        mut f: impl FnMut(&csv::StringRecord, u64) -> std::result::Result<(), String>,
    ) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            let more = self
                .reader
                .read_record(&mut record)
                .map_err(|e| Error::Parse {
                    path: self.source.clone(),
                    line: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                })?;
            if !more {
                return Ok(());
            }
            let line = record.position().map_or(0, |p| p.line());
            f(&record, line).map_err(|message| Error::Parse {
                path: self.source.clone(),
                line,
                message,
            })?;
        }
    }
}

fn real(field: &str, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = field
        .parse()
        .map_err(|_| format!("{name}: `{field}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("{name}: `{field}` is not finite"));
    }
    Ok(v)
}

/// Parses a pairs CSV. Row errors carry the 1-based line number.
pub fn read_pairs<R: Read>(input: R, source: &str) -> Result<Vec<PairRecord>> {
    let mut pairs = Vec::new();
    Rows::new(input, source, &PAIRS_HEADER)?.for_each(|row, _| {
        let truth = match row[2].to_ascii_lowercase().as_str() {
            "genuine" => GroundTruth::Genuine,
            "impostor" => GroundTruth::Impostor,
            other => return Err(format!("ground_truth `{other}` is not genuine or impostor")),
        };
        if row[0].is_empty() {
            return Err("empty pair_id".into());
        }
        if row[3].is_empty() {
            return Err("empty group".into());
        }
        pairs.push(PairRecord {
            pair_id: row[0].to_string(),
            score: real(&row[1], "score")?,
            ground_truth: truth,
            group: row[3].to_string(),
        });
        Ok(())
    })?;
    validate_pairs(&pairs)?;
    Ok(pairs)
}

pub fn read_pairs_file(path: &Path) -> Result<Vec<PairRecord>> {
    read_pairs(open(path)?, &path.display().to_string())
}

pub fn write_pairs<W: Write>(out: W, pairs: &[PairRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(PAIRS_HEADER).map_err(csv_err)?;
    for p in pairs {
        let truth = match p.ground_truth {
            GroundTruth::Genuine => "genuine",
            GroundTruth::Impostor => "impostor",
        };
        w.write_record([p.pair_id.as_str(), &p.score.to_string(), truth, &p.group])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn read_landmarks<R: Read>(input: R, source: &str) -> Result<Vec<(String, LandmarkSet)>> {
    let mut out = Vec::new();
    Rows::new(input, source, &LANDMARKS_HEADER)?.for_each(|row, _| {
        let mut v = [0.0; 10];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = real(&row[i + 1], LANDMARKS_HEADER[i + 1])?;
        }
        let p = |i: usize| Point::new(v[2 * i], v[2 * i + 1]);
        out.push((
            row[0].to_string(),
            LandmarkSet {
                left_eye: p(0),
                right_eye: p(1),
                nose: p(2),
                left_mouth: p(3),
                right_mouth: p(4),
            },
        ));
        Ok(())
    })?;
    Ok(out)
}

pub fn read_landmarks_file(path: &Path) -> Result<Vec<(String, LandmarkSet)>> {
    read_landmarks(open(path)?, &path.display().to_string())
}

pub fn write_landmarks<W: Write>(out: W, rows: &[(String, LandmarkSet)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(LANDMARKS_HEADER).map_err(csv_err)?;
    for (id, lm) in rows {
        let mut rec = vec![id.clone()];
        for p in [
            lm.left_eye,
            lm.right_eye,
            lm.nose,
            lm.left_mouth,
            lm.right_mouth,
        ] {
            rec.push(p.x.to_string());
            rec.push(p.y.to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

/// One row of the saliency manifest, with paths resolved against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub pair_id: String,
    pub saliency: PathBuf,
    pub mask: PathBuf,
}

pub fn read_saliency_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    Rows::new(open(path)?, &path.display().to_string(), &MANIFEST_HEADER)?.for_each(|row, _| {
        if row[0].is_empty() {
            return Err("empty pair_id".into());
        }
        out.push(ManifestEntry {
            pair_id: row[0].to_string(),
            saliency: base.join(&row[1]),
            mask: base.join(&row[2]),
        });
        Ok(())
    })?;
    Ok(out)
}
