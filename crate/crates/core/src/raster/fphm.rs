//! FPHM phase-map file format.
//!
//! Layout: magic `FPHM`, width and height as little-endian `u32`, then
//! `width * height` little-endian IEEE-754 `f32` values row-major. NaN encodes
//! an invalid pixel, which keeps the file self-describing without a sidecar
//! mask. Finite values round-trip losslessly at `f32` precision.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{Grid, Mask, Unit};

pub const MAGIC: [u8; 4] = *b"FPHM";

pub fn encode(grid: &Grid, mask: &Mask) -> Result<Vec<u8>> {
    mask.check_same_dims_grid(grid)?;
    let mut out = Vec::with_capacity(12 + grid.len() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            let value = if mask.get(x, y) {
                let v = grid.get(x, y);
                if !v.is_finite() {
                    return Err(Error::NonFiniteAtValidPixel { x, y });
                }
                v as f32
            } else {
                f32::NAN
            };
            out.extend_from_slice(&value.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(Grid, Mask)> {
    if bytes.len() < 12 {
        return Err(Error::TruncatedPayload {
            expected: 12,
            got: bytes.len(),
        });
    }
    if bytes[..4] != MAGIC {
        return Err(Error::UnsupportedMagic {
            expected: "FPHM".into(),
            found: String::from_utf8_lossy(&bytes[..4]).into_owned(),
        });
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[12..];
    if payload.len() != expected {
        return Err(Error::PayloadSizeMismatch {
            expected,
            got: payload.len(),
        });
    }

    let mut values = Vec::with_capacity(width * height);
    let mut valid = Vec::with_capacity(width * height);
    for chunk in payload.chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if v.is_nan() {
            values.push(f64::NAN);
            valid.push(false);
        } else {
            values.push(v as f64);
            valid.push(true);
        }
    }

    Ok((
        Grid::new(width, height, Unit::Radians, values)?,
        Mask::new(width, height, valid)?,
    ))
}

/// Read a phase map; the grid is tagged [`Unit::Radians`]. Use
/// [`Grid::retag`] when the file holds a different quantity (modulation,
/// heights, difference maps).
pub fn read_phase_map<P: AsRef<Path>>(path: P) -> Result<(Grid, Mask)> {
    decode(&fs::read(path)?)
}

pub fn write_phase_map<P: AsRef<Path>>(grid: &Grid, mask: &Mask, path: P) -> Result<()> {
    Ok(fs::write(path, encode(grid, mask)?)?)
}
