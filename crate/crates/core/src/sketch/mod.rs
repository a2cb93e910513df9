//! Precomputed sparse rows of `p_{L,u}` answering any pair in O(1) lookups.
//!
//! Row `u` stores estimates of `p_{L,u}(v)` for candidate vertices `v` with
//! `d_v <= d_u`. A query reads the row of the higher-degree endpoint and
//! relies on `p_{L,u}(v) / d_v = p_{L,v}(u) / d_u` for the mirrored entry.

mod build;
mod format;

pub use build::{build_index, build_row, row_entry, RowBuild, SketchConfig, WalkVisitCounts};
pub use format::{load_index, read_index, save_index, write_index, FormatError, FORMAT_VERSION, MAGIC};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ERSketch {
    pub n: usize,
    pub m: usize,
    pub steps: usize,
    pub eps: f64,
    pub r_max: f64,
    pub seed: u64,
    pub degrees: Vec<u64>,
    /// `rows[u]`: `(v, p_hat_{L,u}(v))` sorted by `v`.
    pub rows: Vec<Vec<(u32, f64)>>,
}

impl ERSketch {
    pub fn entry(&self, u: usize, v: usize) -> Option<f64> {
        let row = &self.rows[u];
        row.binary_search_by_key(&(v as u32), |e| e.0).ok().map(|i| row[i].1)
    }

    pub fn stored_entries(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Bit-pattern equality of every stored float and all metadata.
    pub fn bit_identical(&self, other: &ERSketch) -> bool {
        let rows_equal = self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| x.0 == y.0 && x.1.to_bits() == y.1.to_bits())
            });
        self.n == other.n
            && self.m == other.m
            && self.steps == other.steps
            && self.eps.to_bits() == other.eps.to_bits()
            && self.r_max.to_bits() == other.r_max.to_bits()
            && self.seed == other.seed
            && self.degrees == other.degrees
            && rows_equal
    }

    /// Resistance estimate for `(s, t)`. Endpoints are ordered by
    /// `(degree, id)` so `query(s, t) == query(t, s)` exactly; absent entries
    /// read as zero.
    pub fn query(&self, s: usize, t: usize) -> Result<f64> {
        for v in [s, t] {
            if v >= self.n {
                return Err(Error::VertexOutOfRange { vertex: v, n: self.n });
            }
        }
        if s == t {
            return Ok(0.0);
        }
        let key = |v: usize| (self.degrees[v], v);
        let (lo, hi) = if key(s) <= key(t) { (s, t) } else { (t, s) };
        let (d_lo, d_hi) = (self.degrees[lo] as f64, self.degrees[hi] as f64);
        let get = |u, v| self.entry(u, v).unwrap_or(0.0);
        Ok(get(lo, lo) / d_lo - 2.0 * get(hi, lo) / d_lo + get(hi, hi) / d_hi)
    }
}
