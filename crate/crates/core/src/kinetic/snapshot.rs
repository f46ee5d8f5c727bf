//! Binary snapshots of an [`AngularField`].
//!
//! Layout, all little-endian: magic `LLKF`, u32 version, u32 nx, u32 K,
//! f64 L, f64 |v|, then (re, im) f64 pairs in spatial-mode-major,
//! harmonic-minor order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::field::AngularField;
use super::grid::GridSpec;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LLKF";
pub const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(field: &AngularField, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(field.grid.nx as u32).to_le_bytes())?;
    w.write_all(&(field.harmonics as u32).to_le_bytes())?;
    w.write_all(&field.grid.side.to_le_bytes())?;
    w.write_all(&field.speed.to_le_bytes())?;
    for c in &field.coeffs {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| Error::Snapshot(format!("truncated snapshot: {e}")))?;
    Ok(b)
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<AngularField> {
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let nx = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let harmonics = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let side = f64::from_le_bytes(read_array(&mut r)?);
    let speed = f64::from_le_bytes(read_array(&mut r)?);
    let grid = GridSpec::new(side, nx).map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut field = AngularField::zeros(grid, harmonics, speed);
    for c in field.coeffs.iter_mut() {
        let re = f64::from_le_bytes(read_array(&mut r)?);
        let im = f64::from_le_bytes(read_array(&mut r)?);
        *c = Complex64::new(re, im);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes after coefficients".into()));
    }
    Ok(field)
}

pub fn save_snapshot(field: &AngularField, path: &Path) -> Result<()> {
    write_snapshot(field, BufWriter::new(File::create(path)?))
}

pub fn load_snapshot(path: &Path) -> Result<AngularField> {
    read_snapshot(BufReader::new(File::open(path)?))
}
