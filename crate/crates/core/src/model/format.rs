//! Binary model container.
//!
//! ```text
//! "NLEM" | version u8 = 1 | kind u8 | token_len u8 | kernel token (ASCII)
//! d u64 | D u64 | [N u64, kernelized only] | bias f64 | margin f64
//! parameters, f64 row-major:
//!   linear      L̃ (d×D)
//!   nonlinear   L  (d×D)
//!   kernelized  A  (d×N), anchors (N×D)
//!   pca         components (d×D), mean (D), explained variance (d)
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{KernelizedModel, LinearModel, Model, NonlinearModel};
use crate::error::{Error, Result};
use crate::kernel::KernelId;
use crate::matrix::Matrix;
use crate::pca::PcaModel;

const MAGIC: &[u8; 4] = b"NLEM";
const VERSION: u8 = 1;

const KIND_LINEAR: u8 = 0;
const KIND_NONLINEAR: u8 = 1;
const KIND_KERNELIZED: u8 = 2;
const KIND_PCA: u8 = 3;

pub fn write_model<W: Write>(model: &Model, mut w: W) -> Result<()> {
    let (kind, kernel) = match model {
        Model::Linear(_) => (KIND_LINEAR, KernelId::Linear),
        Model::Nonlinear(m) => (KIND_NONLINEAR, m.kernel),
        Model::Kernelized(m) => (KIND_KERNELIZED, m.kernel),
        Model::Pca(_) => (KIND_PCA, KernelId::Linear),
    };
    let token = kernel.token().as_bytes();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    buf.push(kind);
    buf.push(token.len() as u8);
    buf.extend_from_slice(token);

    let put_u64 = |buf: &mut Vec<u8>, v: usize| buf.extend_from_slice(&(v as u64).to_le_bytes());
    let put_f64s = |buf: &mut Vec<u8>, vs: &[f64]| {
        for v in vs {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    };
    match model {
        Model::Linear(m) => {
            put_u64(&mut buf, m.projection.rows());
            put_u64(&mut buf, m.projection.cols());
            put_f64s(&mut buf, &[m.bias, m.margin]);
            put_f64s(&mut buf, m.projection.as_slice());
        }
        Model::Nonlinear(m) => {
            put_u64(&mut buf, m.landmarks.rows());
            put_u64(&mut buf, m.landmarks.cols());
            put_f64s(&mut buf, &[m.bias, m.margin]);
            put_f64s(&mut buf, m.landmarks.as_slice());
        }
        Model::Kernelized(m) => {
            put_u64(&mut buf, m.coefficients.rows());
            put_u64(&mut buf, m.anchors.cols());
            put_u64(&mut buf, m.anchors.rows());
            put_f64s(&mut buf, &[m.bias, m.margin]);
            put_f64s(&mut buf, m.coefficients.as_slice());
            put_f64s(&mut buf, m.anchors.as_slice());
        }
        Model::Pca(m) => {
            put_u64(&mut buf, m.components().rows());
            put_u64(&mut buf, m.components().cols());
            put_f64s(&mut buf, &[0.0, 0.0]);
            put_f64s(&mut buf, m.components().as_slice());
            put_f64s(&mut buf, m.mean());
            put_f64s(&mut buf, m.explained_variance());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<Model> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_model(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    decode(&fs::read(path)?)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptPayload(format!("truncated while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u64(&mut self, what: &str) -> Result<usize> {
        let b = self.take(8, what)?;
        let v = u64::from_le_bytes(b.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::CorruptPayload(format!("{what} = {v} does not fit")))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::CorruptPayload(format!("{what} size overflows")))?;
        Ok(self
            .take(len, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<Matrix> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::CorruptPayload(format!("{what} size overflows")))?;
        Matrix::new(rows, cols, self.f64s(n, what)?)
    }
}

fn decode(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic { expected: "NLEM" });
    }
    let mut c = Cursor { bytes, pos: 4 };
    let version = c.u8("version")?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let kind = c.u8("model kind")?;
    let token_len = c.u8("kernel token length")? as usize;
    let token = std::str::from_utf8(c.take(token_len, "kernel token")?)
        .map_err(|_| Error::CorruptPayload("kernel token is not ASCII".into()))?;
    let kernel: KernelId = token
        .parse()
        .map_err(|_| Error::CorruptPayload(format!("unknown kernel token {token:?}")))?;
    let d = c.u64("d")?;
    let dims = c.u64("D")?;
    let anchors = if kind == KIND_KERNELIZED { c.u64("N")? } else { 0 };
    let hyper = c.f64s(2, "bias and margin")?;
    let (bias, margin) = (hyper[0], hyper[1]);

    let corrupt = |e: Error| match e {
        Error::CorruptPayload(_) => e,
        other => Error::CorruptPayload(other.to_string()),
    };
    let model = match kind {
        KIND_LINEAR => {
            let p = c.matrix(d, dims, "projection")?;
            Model::Linear(LinearModel::new(p, bias, margin).map_err(corrupt)?)
        }
        KIND_NONLINEAR => {
            let l = c.matrix(d, dims, "landmarks")?;
            Model::Nonlinear(NonlinearModel::new(l, bias, margin, kernel).map_err(corrupt)?)
        }
        KIND_KERNELIZED => {
            let a = c.matrix(d, anchors, "coefficients")?;
            let x = c.matrix(anchors, dims, "anchors")?;
            Model::Kernelized(KernelizedModel::new(a, x, bias, margin, kernel).map_err(corrupt)?)
        }
        KIND_PCA => {
            let comps = c.matrix(d, dims, "components")?;
            let mean = c.f64s(dims, "mean")?;
            let var = c.f64s(d, "explained variance")?;
            Model::Pca(PcaModel::from_parts(mean, comps, var).map_err(corrupt)?)
        }
        other => return Err(Error::CorruptPayload(format!("unknown model kind {other}"))),
    };
    if c.pos != bytes.len() {
        return Err(Error::CorruptPayload(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(model)
}
