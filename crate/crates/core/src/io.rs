//! On-disk formats for features, labels and pairs.
//!
//! Binary feature files: `"FMAT"`, version byte `0x01`, `N` and `D` as u64
//! little-endian, then `N·D` f32 little-endian values row-major. Text feature
//! files are headerless CSV, one row per line. Labels are one non-negative
//! integer per line; pairs are whitespace-separated `i j y` lines with
//! `y ∈ {-1, 1}`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{FeatureMatrix, Labels, PairConstraint, PairLabel, PairSet};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const FEATURE_MAGIC: &[u8; 4] = b"FMAT";
const FEATURE_VERSION: u8 = 1;

pub fn write_features_binary<W: Write>(features: &Matrix, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&[FEATURE_VERSION])?;
    w.write_all(&(features.rows() as u64).to_le_bytes())?;
    w.write_all(&(features.cols() as u64).to_le_bytes())?;
    for v in features.as_slice() {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_binary(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < 4 || &bytes[..4] != FEATURE_MAGIC {
        return Err(Error::BadMagic { expected: "FMAT" });
    }
    if bytes.len() < 21 {
        return Err(Error::CorruptPayload("truncated feature header".into()));
    }
    if bytes[4] != FEATURE_VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    let n = u64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes"));
    let d = u64::from_le_bytes(bytes[13..21].try_into().expect("8 bytes"));
    let payload = &bytes[21..];
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::CorruptPayload("feature dimensions overflow".into()))?;
    if payload.len() as u64 != expected {
        return Err(Error::CorruptPayload(format!(
            "expected {expected} payload bytes for {n}x{d}, found {}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    FeatureMatrix::new(Matrix::new(n as usize, d as usize, data)?)
}

pub fn write_features_csv<W: Write>(features: &Matrix, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    for r in features.iter_rows() {
        let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv<R: Read>(r: R) -> Result<FeatureMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: k + 1,
                    reason: format!("{t:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: k + 1,
                    reason: format!("{} columns, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    FeatureMatrix::from_rows(&rows)
}

/// Reads a feature file, telling binary from CSV by the magic bytes.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(FEATURE_MAGIC) {
        read_features_binary(&bytes)
    } else {
        read_features_csv(bytes.as_slice())
    }
}

/// Writes CSV when the path ends in `.csv`, the binary format otherwise.
pub fn save_features(features: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_features_csv(features, file)
    } else {
        write_features_binary(features, file)
    }
}

pub fn read_labels<R: Read>(r: R) -> Result<Labels> {
    let mut labels = Vec::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        labels.push(t.parse::<u32>().map_err(|e| Error::Parse {
            line: k + 1,
            reason: format!("label {t:?}: {e}"),
        })?);
    }
    Ok(Labels::new(labels))
}

pub fn write_labels<W: Write>(labels: &Labels, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    for l in labels.as_slice() {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Labels> {
    read_labels(fs::File::open(path)?)
}

pub fn save_labels(labels: &Labels, path: impl AsRef<Path>) -> Result<()> {
    write_labels(labels, fs::File::create(path)?)
}

pub fn read_pairs<R: Read>(r: R) -> Result<PairSet> {
    let mut pairs = Vec::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::InvalidPair { line: k + 1, reason };
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad index {:?}", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad index {:?}", fields[1])))?;
        let label = fields[2]
            .parse::<i64>()
            .ok()
            .and_then(PairLabel::from_sign)
            .ok_or_else(|| bad(format!("label {:?} is not -1 or 1", fields[2])))?;
        if i == j {
            return Err(bad(format!("pair ({i}, {j}) joins a row with itself")));
        }
        pairs.push(PairConstraint { i, j, label });
    }
    PairSet::new(pairs)
}

pub fn write_pairs<W: Write>(pairs: &PairSet, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    for p in pairs.iter() {
        let y = match p.label {
            PairLabel::Similar => 1,
            PairLabel::Dissimilar => -1,
        };
        writeln!(w, "{} {} {y}", p.i, p.j)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<PairSet> {
    read_pairs(fs::File::open(path)?)
}

pub fn save_pairs(pairs: &PairSet, path: impl AsRef<Path>) -> Result<()> {
    write_pairs(pairs, fs::File::create(path)?)
}
