//! Binary field checkpoints.
//!
//! Layout: a 32-byte header (`b"BRLX"`, `u32` version, `u32` dimension,
//! `u32` samples per side, `f64` side length, 8 reserved zero bytes), then the
//! samples as little-endian `f64` in row-major order. All integers are
//! little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::euler::EulerState;
use crate::scalar::Real;
use crate::spectral::{Field, TorusGrid, VectorField};

pub const MAGIC: [u8; 4] = *b"BRLX";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

pub fn write_field<T: Real>(mut w: impl Write, f: &Field<T>) -> Result<()> {
    let g = f.grid();
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(g.dim() as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(g.side() as u32).to_le_bytes());
    header[16..24].copy_from_slice(&g.length().as_f64().to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(8 * f.samples().len());
    for v in f.samples() {
        body.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

/// Reads one field, building its grid from the header.
pub fn read_field<T: Real>(mut r: impl Read) -> Result<Field<T>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    if header[24..32].iter().any(|&b| b != 0) {
        return Err(Error::Format("reserved header bytes are not zero".into()));
    }
    let dim = word(8) as usize;
    let side = word(12) as usize;
    let length = f64::from_le_bytes(header[16..24].try_into().expect("8 bytes"));
    let grid = TorusGrid::new(dim, side, T::of(length))
        .map_err(|e| Error::Format(format!("header describes no valid grid: {e}")))?;
    let mut body = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut body)
        .map_err(|e| Error::Format(format!("truncated body: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after samples".into()));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
        .collect();
    Field::new(&grid, samples)
}

pub fn save_field<T: Real>(path: &Path, f: &Field<T>) -> Result<()> {
    write_field(BufWriter::new(File::create(path)?), f)
}

pub fn load_field<T: Real>(path: &Path) -> Result<Field<T>> {
    read_field(BufReader::new(File::open(path)?))
}

/// Writes `<stem>_rho.bin` (the symmetrized density) and `<stem>_v<i>.bin`.
pub fn save_state<T: Real>(dir: &Path, stem: &str, state: &EulerState<T>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    save_field(&dir.join(format!("{stem}_rho.bin")), &state.varrho)?;
    for (i, c) in state.v.components().iter().enumerate() {
        save_field(&dir.join(format!("{stem}_v{i}.bin")), c)?;
    }
    Ok(())
}

/// Inverse of [`save_state`]; the time is not stored and reads as zero.
pub fn load_state<T: Real>(dir: &Path, stem: &str) -> Result<EulerState<T>> {
    let varrho: Field<T> = load_field(&dir.join(format!("{stem}_rho.bin")))?;
    let d = varrho.grid().dim();
    let comps = (0..d)
        .map(|i| {
            let c: Field<T> = load_field(&dir.join(format!("{stem}_v{i}.bin")))?;
            // Re-home on the shared grid handle.
            Field::new(varrho.grid(), c.into_samples())
        })
        .collect::<Result<Vec<_>>>()?;
    EulerState::new(varrho, VectorField::from_components(comps)?)
}
