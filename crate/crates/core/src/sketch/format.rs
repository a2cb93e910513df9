//! Versioned little-endian index file.
//!
//! ```text
//! "ERSK"  u32 version
//! u64 n   u64 m   u64 L   u64 eps bits   u64 r_max bits   u64 seed
//! u64 degree[n]
//! per vertex: u64 count, then count x (u64 vertex, u64 value bits), sorted
//! u64 CRC-64/XZ of everything above
//! ```

use std::fs;
use std::path::Path;

use crc::{Crc, CRC_64_XZ};
use thiserror::Error;

use super::ERSketch;
use crate::error::Result;

pub const MAGIC: &[u8; 4] = b"ERSK";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_BYTES: usize = 4 + 4 + 6 * 8;
const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("index checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("index file truncated: needs at least {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("malformed index: {0}")]
    Malformed(String),
}

pub fn write_index(sk: &ERSketch) -> Vec<u8> {
    let entries = sk.stored_entries();
    let mut out = Vec::with_capacity(HEADER_BYTES + 8 * sk.n + 8 * sk.n + 16 * entries + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for word in [
        sk.n as u64,
        sk.m as u64,
        sk.steps as u64,
        sk.eps.to_bits(),
        sk.r_max.to_bits(),
        sk.seed,
    ] {
        out.extend_from_slice(&word.to_le_bytes());
    }
    for &d in &sk.degrees {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for row in &sk.rows {
        out.extend_from_slice(&(row.len() as u64).to_le_bytes());
        for &(v, value) in row {
            out.extend_from_slice(&(v as u64).to_le_bytes());
            out.extend_from_slice(&value.to_bits().to_le_bytes());
        }
    }
    let crc = CRC64.checksum(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u64(&mut self) -> std::result::Result<u64, FormatError> {
        let end = self.pos + 8;
        if end > self.bytes.len() {
            return Err(FormatError::Truncated { needed: end + 8, found: self.bytes.len() + 8 });
        }
        let word = u64::from_le_bytes(self.bytes[self.pos..end].try_into().unwrap());
        self.pos = end;
        Ok(word)
    }

    fn usize(&mut self, what: &str) -> std::result::Result<usize, FormatError> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| FormatError::Malformed(format!("{what} {v} does not fit in memory")))
    }
}

/// Decodes the body (everything before the checksum).
fn parse_body(body: &[u8]) -> std::result::Result<ERSketch, FormatError> {
    let mut r = Reader { bytes: body, pos: 8 };
    let n = r.usize("vertex count")?;
    let m = r.usize("edge count")?;
    let steps = r.usize("step count")?;
    let eps = f64::from_bits(r.u64()?);
    let r_max = f64::from_bits(r.u64()?);
    let seed = r.u64()?;
    // Each vertex needs at least a degree and a row count.
    if n.saturating_mul(16) > body.len().saturating_sub(r.pos) {
        return Err(FormatError::Truncated { needed: r.pos + n.saturating_mul(16) + 8, found: body.len() + 8 });
    }
    let degrees = (0..n).map(|_| r.u64()).collect::<std::result::Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(n);
    for u in 0..n {
        let count = r.usize("row length")?;
        if count.saturating_mul(16) > body.len() - r.pos {
            return Err(FormatError::Truncated { needed: r.pos + count.saturating_mul(16) + 8, found: body.len() + 8 });
        }
        let mut row = Vec::with_capacity(count);
        for _ in 0..count {
            let v = r.u64()?;
            let value = f64::from_bits(r.u64()?);
            if v >= n as u64 {
                return Err(FormatError::Malformed(format!("row {u} names vertex {v} of {n}")));
            }
            if row.last().is_some_and(|&(prev, _): &(u32, f64)| prev as u64 >= v) {
                return Err(FormatError::Malformed(format!("row {u} is not sorted")));
            }
            row.push((v as u32, value));
        }
        rows.push(row);
    }
    if r.pos != body.len() {
        return Err(FormatError::Malformed(format!("{} unexpected trailing bytes", body.len() - r.pos)));
    }
    Ok(ERSketch { n, m, steps, eps, r_max, seed, degrees, rows })
}

pub fn read_index(bytes: &[u8]) -> std::result::Result<ERSketch, FormatError> {
    if bytes.len() < 4 {
        return Err(if MAGIC.starts_with(bytes) {
            FormatError::Truncated { needed: HEADER_BYTES + 8, found: bytes.len() }
        } else {
            FormatError::BadMagic
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    if bytes.len() < 8 {
        return Err(FormatError::Truncated { needed: HEADER_BYTES + 8, found: bytes.len() });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(FormatError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    if bytes.len() < HEADER_BYTES + 8 {
        return Err(FormatError::Truncated { needed: HEADER_BYTES + 8, found: bytes.len() });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let computed = CRC64.checksum(body);
    if stored != computed {
        // A short file also fails the checksum; report it as truncation when
        // the structure itself runs past the end.
        return Err(match parse_body(body) {
            Err(e @ FormatError::Truncated { .. }) => e,
            _ => FormatError::ChecksumMismatch { stored, computed },
        });
    }
    parse_body(body)
}

/// Writes the index to `path`, returning the number of bytes written.
pub fn save_index(sk: &ERSketch, path: &Path) -> Result<u64> {
    let bytes = write_index(sk);
    fs::write(path, &bytes)?;
    Ok(bytes.len() as u64)
}

pub fn load_index(path: &Path) -> Result<ERSketch> {
    let bytes = fs::read(path)?;
    Ok(read_index(&bytes)?)
}
