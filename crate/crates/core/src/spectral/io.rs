//! Binary field dumps.
//!
//! Layout (little-endian): magic `OBSF`, `u32` version, `u32` dimension,
//! `u32` points per axis, `f64` period per axis, then `(re, im)` pairs as
//! `f64` in row-major order. A JSON sidecar carries the grid metadata.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{Field, GridSpec};
use crate::error::{ObsError, Result};
use crate::scalar::Real;

pub const FIELD_MAGIC: &[u8; 4] = b"OBSF";
pub const FIELD_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub shape: Vec<usize>,
    pub lengths: Vec<f64>,
    pub spacing: Vec<f64>,
}

pub fn encode_field<T: Real>(field: &Field<T>) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(12 + 12 * g.dim() + 16 * g.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    for &n in g.shape() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &l in g.lengths() {
        out.extend_from_slice(&l.as_f64().to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.re.as_f64().to_le_bytes());
        out.extend_from_slice(&v.im.as_f64().to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(ObsError::Format("truncated field file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_field<T: Real>(bytes: &[u8]) -> Result<Field<T>> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(4)? != FIELD_MAGIC {
        return Err(ObsError::Format("bad magic, expected OBSF".into()));
    }
    let version = c.u32()?;
    if version != FIELD_VERSION {
        return Err(ObsError::Format(format!("unsupported field version {version}")));
    }
    let d = c.u32()? as usize;
    if !(1..=3).contains(&d) {
        return Err(ObsError::Format(format!("bad dimension {d}")));
    }
    let shape = (0..d).map(|_| c.u32().map(|n| n as usize)).collect::<Result<Vec<_>>>()?;
    let lengths = (0..d).map(|_| c.f64().map(T::lit)).collect::<Result<Vec<_>>>()?;
    let grid = GridSpec::new(shape, lengths)?;
    let values = (0..grid.len())
        .map(|_| Ok(Complex::new(T::lit(c.f64()?), T::lit(c.f64()?))))
        .collect::<Result<Vec<_>>>()?;
    if c.pos != bytes.len() {
        return Err(ObsError::Format("trailing bytes after field data".into()));
    }
    Field::new(grid, values)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `path` and `path.json`.
pub fn write_field<T: Real>(path: &Path, field: &Field<T>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_field(field))?;
    let g = field.grid();
    let meta = FieldSidecar {
        format: "OBSF".into(),
        version: FIELD_VERSION,
        dim: g.dim(),
        shape: g.shape().to_vec(),
        lengths: g.lengths().iter().map(|l| l.as_f64()).collect(),
        spacing: (0..g.dim()).map(|a| g.spacing(a).as_f64()).collect(),
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}

pub fn read_field<T: Real>(path: &Path) -> Result<Field<T>> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    decode_field(&buf)
}
