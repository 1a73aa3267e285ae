//! Raw per-vertex temperature files.
//!
//! Little-endian: magic `PHFLD64\0`, `f64` time, `u32` plane count, then per
//! plane `u32 nu`, `u32 nv` and `nu·nv` `f64` temperatures.

use std::path::Path;

use super::TemperatureField;
use crate::layout::Lattice;
use crate::{Error, Result};

pub const FIELD_MAGIC: &[u8; 8] = b"PHFLD64\0";

pub fn encode_field(field: &TemperatureField, lattices: &[Lattice]) -> Result<Vec<u8>> {
    if lattices.len() != field.planes.len() || lattices.iter().zip(&field.planes).any(|(l, p)| l.len() != p.len()) {
        return Err(Error::input("field does not match the lattices"));
    }
    let mut out = Vec::new();
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&field.time.to_le_bytes());
    out.extend_from_slice(&(lattices.len() as u32).to_le_bytes());
    for (l, p) in lattices.iter().zip(&field.planes) {
        out.extend_from_slice(&(l.nu as u32).to_le_bytes());
        out.extend_from_slice(&(l.nv as u32).to_le_bytes());
        for t in p {
            out.extend_from_slice(&t.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_field(path: &Path, field: &TemperatureField, lattices: &[Lattice]) -> Result<()> {
    let bytes = encode_field(field, lattices)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Returns the field and the `(nu, nv)` of each plane.
pub fn decode_field(bytes: &[u8]) -> std::result::Result<(TemperatureField, Vec<(usize, usize)>), String> {
    let mut pos = 0;
    let mut take = |n: usize| -> std::result::Result<&[u8], String> {
        let s = bytes.get(pos..pos + n).ok_or("truncated field file")?;
        pos += n;
        Ok(s)
    };
    if take(8)? != FIELD_MAGIC {
        return Err("not a temperature field file".into());
    }
    let time = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap()) as usize;
    let count = u32_at(take(4)?);
    let mut planes = Vec::with_capacity(count.min(1024));
    let mut dims = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let nu = u32_at(take(4)?);
        let nv = u32_at(take(4)?);
        let n = nu.checked_mul(nv).ok_or("plane size overflows")?;
        let raw = take(n.checked_mul(8).ok_or("plane size overflows")?)?;
        planes.push(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect());
        dims.push((nu, nv));
    }
    if pos != bytes.len() {
        return Err("trailing bytes after field data".into());
    }
    Ok((TemperatureField { time, planes }, dims))
}

pub fn read_field(path: &Path) -> Result<(TemperatureField, Vec<(usize, usize)>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_field(&bytes).map_err(|d| Error::format(path, d))
}
