//! Seeded random graph generators.

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::WalkRng;

pub const REGULAR_RETRY_CAP: usize = 1000;

/// Simple `d`-regular graph on `n` vertices from the pairing model.
///
/// Points are paired one uniformly chosen pair at a time; a pair that would
/// create a loop or a repeated edge is redrawn. If only bad pairs remain the
/// attempt restarts from scratch, up to [`REGULAR_RETRY_CAP`] times.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d == 0 || d >= n {
        return Err(Error::InvalidParameter(format!("need 0 < d < n, got d={d}, n={n}")));
    }
    if (n * d) % 2 == 1 {
        return Err(Error::InvalidParameter(format!("n*d must be even, got n={n}, d={d}")));
    }
    let root = WalkRng::new(seed);
    for attempt in 0..REGULAR_RETRY_CAP {
        let mut rng = root.derive(attempt as u64);
        if let Some(edges) = try_pairing(n, d, &mut rng) {
            return Graph::from_edges(n, &edges);
        }
    }
    Err(Error::RetryCapExceeded(REGULAR_RETRY_CAP))
}

fn try_pairing(n: usize, d: usize, rng: &mut WalkRng) -> Option<Vec<(usize, usize)>> {
    let mut points: Vec<u32> = (0..n as u32).flat_map(|u| std::iter::repeat(u).take(d)).collect();
    let mut seen: FxHashSet<(u32, u32)> = FxHashSet::default();
    let mut edges = Vec::with_capacity(n * d / 2);
    let key = |a: u32, b: u32| if a < b { (a, b) } else { (b, a) };
    while !points.is_empty() {
        let len = points.len();
        let mut paired = false;
        for _ in 0..64 {
            let i = rng.below(len);
            let mut j = rng.below(len - 1);
            if j >= i {
                j += 1;
            }
            let (a, b) = (points[i], points[j]);
            if a != b && !seen.contains(&key(a, b)) {
                seen.insert(key(a, b));
                edges.push((a as usize, b as usize));
                let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                points.swap_remove(hi);
                points.swap_remove(lo);
                paired = true;
                break;
            }
        }
        if !paired {
            // Many rejections in a row: check whether any valid pair is left.
            let any = (0..len).any(|i| {
                (i + 1..len).any(|j| points[i] != points[j] && !seen.contains(&key(points[i], points[j])))
            });
            if !any {
                return None;
            }
        }
    }
    Some(edges)
}

/// Connected random graph: a random recursive tree plus independent extra
/// edges with probability `p`.
pub fn random_connected(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    let mut rng = WalkRng::new(seed).derive(0x6e72);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.below(v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.unit() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

/// Uniform random permutation of `0..n` (Fisher-Yates).
pub fn permutation(n: usize, rng: &mut WalkRng) -> Vec<usize> {
    let mut items: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i + 1);
        items.swap(i, j);
    }
    items
}
