//! Binary PGM (P5) image I/O, 8-bit and 16-bit big-endian samples.
//!
//! Reading maps samples to real intensities in `[0, maxval]`. Writing emits a
//! canonical header (`P5\n<w> <h>\n<maxval>\n`) followed by the payload, so
//! `write(read(f))` reproduces any canonically written file byte for byte.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{Grid, Unit};

/// Parse a binary PGM from raw bytes, returning the grid and the file's maxval.
pub fn decode(bytes: &[u8]) -> Result<(Grid, u16)> {
    let mut cursor = 0usize;

    let magic = take_token(bytes, &mut cursor)
        .ok_or_else(|| Error::MalformedHeader("missing magic".into()))?;
    if magic != b"P5" {
        return Err(Error::UnsupportedMagic {
            expected: "P5".into(),
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }

    let width = parse_header_number(bytes, &mut cursor, "width")?;
    let height = parse_header_number(bytes, &mut cursor, "height")?;
    let maxval = parse_header_number(bytes, &mut cursor, "maxval")?;
    if maxval == 0 || maxval > u16::MAX as usize {
        return Err(Error::MalformedHeader(format!(
            "maxval {maxval} out of range 1..=65535"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }

    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(cursor) {
        Some(b) if b.is_ascii_whitespace() => cursor += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "expected single whitespace before payload".into(),
            ))
        }
    }

    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let expected = width * height * bytes_per_sample;
    let payload = &bytes[cursor..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            got: payload.len(),
        });
    }

    let mut values = Vec::with_capacity(width * height);
    if bytes_per_sample == 1 {
        values.extend(payload[..expected].iter().map(|&b| b as f64));
    } else {
        for pair in payload[..expected].chunks_exact(2) {
            values.push(u16::from_be_bytes([pair[0], pair[1]]) as f64);
        }
    }

    Ok((
        Grid::new(width, height, Unit::Intensity, values)?,
        maxval as u16,
    ))
}

/// Serialize a grid as binary PGM. Values must be integral and in `[0, maxval]`.
pub fn encode(grid: &Grid, maxval: u16) -> Result<Vec<u8>> {
    if maxval == 0 {
        return Err(Error::MalformedHeader("maxval must be positive".into()));
    }
    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let mut out = Vec::with_capacity(32 + grid.len() * bytes_per_sample);
    out.extend_from_slice(
        format!("P5\n{} {}\n{}\n", grid.width(), grid.height(), maxval).as_bytes(),
    );
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            let v = grid.get(x, y);
            let rounded = v.round();
            if !(v.is_finite() && rounded == v && v >= 0.0 && v <= maxval as f64) {
                return Err(Error::SampleOutOfRange {
                    value: v,
                    maxval,
                    x,
                    y,
                });
            }
            let sample = rounded as u16;
            if bytes_per_sample == 1 {
                out.push(sample as u8);
            } else {
                out.extend_from_slice(&sample.to_be_bytes());
            }
        }
    }
    Ok(out)
}

pub fn read_image<P: AsRef<Path>>(path: P) -> Result<(Grid, u16)> {
    decode(&fs::read(path)?)
}

pub fn write_image<P: AsRef<Path>>(grid: &Grid, maxval: u16, path: P) -> Result<()> {
    Ok(fs::write(path, encode(grid, maxval)?)?)
}

/// Next header token, skipping whitespace and `#` comments.
fn take_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    (*cursor > start).then(|| &bytes[start..*cursor])
}

fn parse_header_number(bytes: &[u8], cursor: &mut usize, field: &str) -> Result<usize> {
    let token = take_token(bytes, cursor)
        .ok_or_else(|| Error::MalformedHeader(format!("missing {field}")))?;
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            Error::MalformedHeader(format!("bad {field}: {:?}", String::from_utf8_lossy(token)))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_two_by_one_8bit() {
        let bytes = b"P5\n2 1\n255\n\x00\xff";
        let (grid, maxval) = decode(bytes).unwrap();
        assert_eq!(maxval, 255);
        assert_eq!(grid.values(), &[0.0, 255.0]);
    }

    #[test]
    fn decode_16bit_big_endian() {
        // sample 0x0102 -> 258
        let bytes = b"P5\n1 1\n65535\n\x01\x02";
        let (grid, _) = decode(bytes).unwrap();
        assert_eq!(grid.values(), &[258.0]);
    }

    #[test]
    fn decode_skips_comments() {
        let bytes = b"P5\n# a comment\n2 1\n# another\n255\n\x07\x09";
        let (grid, _) = decode(bytes).unwrap();
        assert_eq!(grid.values(), &[7.0, 9.0]);
    }

    #[test]
    fn rejects_wrong_magic() {
        assert!(matches!(
            decode(b"P6\n1 1\n255\n\x00"),
            Err(Error::UnsupportedMagic { .. })
        ));
    }

    #[test]
    fn rejects_malformed_header() {
        assert!(matches!(
            decode(b"P5\nnope 1\n255\n\x00"),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn rejects_truncated_payload() {
        assert!(matches!(
            decode(b"P5\n2 2\n255\n\x00\x01"),
            Err(Error::TruncatedPayload { .. })
        ));
    }

    #[test]
    fn round_trip_8bit_is_byte_identical() {
        let original = b"P5\n3 2\n255\n\x00\x10\x20\x30\x40\xff".to_vec();
        let (grid, maxval) = decode(&original).unwrap();
        assert_eq!(encode(&grid, maxval).unwrap(), original);
    }

    #[test]
    fn round_trip_16bit_is_byte_identical() {
        let original = b"P5\n2 1\n65535\n\x01\x02\xff\xfe".to_vec();
        let (grid, maxval) = decode(&original).unwrap();
        assert_eq!(encode(&grid, maxval).unwrap(), original);
    }

    #[test]
    fn encode_rejects_out_of_range() {
        let g = Grid::new(1, 1, Unit::Intensity, vec![300.0]).unwrap();
        assert!(matches!(
            encode(&g, 255),
            Err(Error::SampleOutOfRange { .. })
        ));
        let g = Grid::new(1, 1, Unit::Intensity, vec![0.5]).unwrap();
        assert!(encode(&g, 255).is_err());
    }
}
