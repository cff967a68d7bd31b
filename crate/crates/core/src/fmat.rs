//! `FMAT` dense feature matrices.
//!
//! ```text
//! "FMAT" | version: u32 = 1 | rows: u64 | cols: u64 | rows × cols f32, row-major
//! ```
//!
//! All fields little-endian. Values are stored as `f32` and widened to `f64`
//! on load.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::io::{put_u32, put_u64, write_atomic, Cursor};

pub const FMAT_MAGIC: &[u8; 4] = b"FMAT";
pub const FMAT_VERSION: u32 = 1;

pub fn to_bytes(m: &Array2<f64>) -> Vec<u8> {
    let (rows, cols) = m.dim();
    let mut out = Vec::with_capacity(24 + rows * cols * 4);
    out.extend_from_slice(FMAT_MAGIC);
    put_u32(&mut out, FMAT_VERSION);
    put_u64(&mut out, rows as u64);
    put_u64(&mut out, cols as u64);
    for &v in m.iter() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<Array2<f64>> {
    let mut c = Cursor::new(bytes);
    if c.take(4)? != FMAT_MAGIC {
        return Err(Error::Format("not an FMAT file (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != FMAT_VERSION {
        return Err(Error::Format(format!(
            "FMAT version {version} is not supported (expected {FMAT_VERSION})"
        )));
    }
    let rows = c.u64()? as usize;
    let cols = c.u64()? as usize;
    let n = rows
        .checked_mul(cols)
        .filter(|n| n.checked_mul(4) == Some(bytes.len() - 24))
        .ok_or_else(|| {
            Error::Format(format!(
                "FMAT payload is {} bytes, header says {rows}x{cols}",
                bytes.len() - 24
            ))
        })?;
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        let v = c.f32()?;
        if !v.is_finite() {
            return Err(Error::Format("FMAT contains a non-finite value".into()));
        }
        data.push(v as f64);
    }
    Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked"))
}

pub fn write(path: &Path, m: &Array2<f64>) -> Result<()> {
    write_atomic(path, &to_bytes(m))
}

pub fn read(path: &Path) -> Result<Array2<f64>> {
    from_bytes(&std::fs::read(path)?)
}
