//! CRF1 binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic `CRF1`                              |
//! | 4      | 1    | mode (0 radial, 1 cartesian, 2 cylindrical) |
//! | 5      | 3    | zero                                      |
//! | 8      | 24   | axis counts, 3 x u64 (unused axes = 1)    |
//! | 32     | 24   | extents, 3 x f64 (unused = 0)             |
//! | 56     | 8    | zero                                      |
//! | 64     | 16·n | samples as interleaved (re, im) f64       |
//!
//! A state pair is stored as two records back to back, `u` first.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, StatePair};
use crate::grid::{GeometryMode, GridSpec};

pub const MAGIC: &[u8; 4] = b"CRF1";
pub const HEADER_LEN: usize = 64;

pub fn encode_header(grid: &GridSpec) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[..4].copy_from_slice(MAGIC);
    h[4] = grid.mode().tag();
    for (i, c) in grid.counts().iter().enumerate() {
        h[8 + 8 * i..16 + 8 * i].copy_from_slice(&(*c as u64).to_le_bytes());
    }
    for (i, e) in grid.extents().iter().enumerate() {
        h[32 + 8 * i..40 + 8 * i].copy_from_slice(&e.to_le_bytes());
    }
    h
}

pub fn decode_header(h: &[u8; HEADER_LEN]) -> Result<GridSpec> {
    if &h[..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mode = GeometryMode::from_tag(h[4]).ok_or_else(|| Error::Snapshot(format!("unknown mode byte {}", h[4])))?;
    let mut counts = [0usize; 3];
    let mut extents = [0f64; 3];
    for i in 0..3 {
        let c = u64::from_le_bytes(h[8 + 8 * i..16 + 8 * i].try_into().unwrap());
        counts[i] = usize::try_from(c).map_err(|_| Error::Snapshot("axis count overflows usize".into()))?;
        extents[i] = f64::from_le_bytes(h[32 + 8 * i..40 + 8 * i].try_into().unwrap());
    }
    GridSpec::from_parts(mode, counts, extents).map_err(|e| Error::Snapshot(e.to_string()))
}

pub fn write_field(w: &mut impl Write, field: &ComplexField) -> Result<()> {
    w.write_all(&encode_header(field.grid()))?;
    let mut buf = Vec::with_capacity(16 * field.samples().len());
    for z in field.samples() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field(r: &mut impl Read) -> Result<ComplexField> {
    let mut h = [0u8; HEADER_LEN];
    r.read_exact(&mut h)?;
    let grid = decode_header(&h)?;
    let mut buf = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut buf).map_err(|e| Error::Snapshot(format!("truncated payload: {e}")))?;
    let samples = buf
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    ComplexField::new(grid, samples)
}

pub fn write_pair(path: &Path, state: &StatePair) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut f, &state.u)?;
    write_field(&mut f, &state.v)?;
    f.flush()?;
    Ok(())
}

/// Reads a `(u, v)` snapshot pair; parameters are supplied by the caller.
pub fn read_pair(path: &Path, gamma: f64, mu: f64) -> Result<StatePair> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let u = read_field(&mut f)?;
    let v = read_field(&mut f)?;
    StatePair::new(u, v, gamma, mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_64_bytes_with_fixed_offsets() {
        let g = GridSpec::cylindrical(16, 32, 4.0, 2.5).unwrap();
        let h = encode_header(&g);
        assert_eq!(&h[..4], b"CRF1");
        assert_eq!(h[4], 2);
        assert_eq!(u64::from_le_bytes(h[8..16].try_into().unwrap()), 16);
        assert_eq!(u64::from_le_bytes(h[16..24].try_into().unwrap()), 32);
        assert_eq!(u64::from_le_bytes(h[24..32].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(h[32..40].try_into().unwrap()), 4.0);
        assert_eq!(f64::from_le_bytes(h[40..48].try_into().unwrap()), 2.5);
        assert_eq!(&h[56..], &[0u8; 8]);
    }

    #[test]
    fn rejects_garbage() {
        let mut h = encode_header(&GridSpec::radial(16, 1.0).unwrap());
        h[0] = b'X';
        assert!(decode_header(&h).is_err());
        let mut h = encode_header(&GridSpec::radial(16, 1.0).unwrap());
        h[4] = 9;
        assert!(decode_header(&h).is_err());
        let mut bytes = Vec::new();
        write_field(&mut bytes, &ComplexField::zeros(GridSpec::radial(16, 1.0).unwrap())).unwrap();
        bytes.truncate(HEADER_LEN + 10);
        assert!(read_field(&mut bytes.as_slice()).is_err());
    }

    proptest! {
        #[test]
        fn field_round_trip_is_bit_exact(
            vals in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 32),
            extent in 0.1f64..100.0,
        ) {
            let g = GridSpec::radial(32, extent).unwrap();
            let f = ComplexField::new(g, vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
            let mut bytes = Vec::new();
            write_field(&mut bytes, &f).unwrap();
            prop_assert_eq!(bytes.len(), HEADER_LEN + 16 * 32);
            let back = read_field(&mut bytes.as_slice()).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
