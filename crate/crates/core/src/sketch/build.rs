//! Three-stage row construction.
//!
//! For source `u`:
//! 1. short walks give a rough `p'` and the candidate set `{w : p'(w) > eps/2}`;
//! 2. each candidate `v` (with `d_v <= d_u`) is pushed with a threshold scaled
//!    by `1 / p'(v)`;
//! 3. one batch of walks from `u` is recorded as visit counts, and every
//!    candidate's residuals are scored against the same counts.

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::ERSketch;
use crate::error::{Error, Result};
use crate::estimator::{default_groups, median};
use crate::graph::{Adjacency, Graph};
use crate::push::{cgd, PushState};
use crate::spectral::{SpectralStats, Truncation};
use crate::walk::{lazy_step, tag, walk_rng};

#[derive(Debug, Clone, PartialEq)]
pub struct SketchConfig {
    pub eps: f64,
    pub truncation: Truncation,
    pub seed: u64,
    pub workers: usize,
    /// Overrides the number of median-of-means groups in the last stage.
    pub groups: Option<usize>,
}

impl SketchConfig {
    pub fn new(eps: f64, seed: u64) -> Self {
        Self { eps, truncation: Truncation::default(), seed, workers: 1, groups: None }
    }
}

/// `N_{u,w,k}` split by median-of-means group.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkVisitCounts {
    pub source: usize,
    pub steps: usize,
    /// Walks in each group.
    pub group_walks: Vec<usize>,
    /// Per group, `(w, k, count)` sorted by `(w, k)`.
    pub groups: Vec<Vec<(u32, u32, u32)>>,
}

impl WalkVisitCounts {
    pub fn total_walks(&self) -> usize {
        self.group_walks.iter().sum()
    }

    /// Total `sum_w N_{u,w,k}` over all groups, per step `k`.
    pub fn per_step_totals(&self) -> Vec<usize> {
        let mut totals = vec![0usize; self.steps + 1];
        for group in &self.groups {
            for &(_, k, c) in group {
                totals[k as usize] += c as usize;
            }
        }
        totals
    }

    /// `N_{u,w,k}` summed over groups.
    pub fn count(&self, w: usize, k: usize) -> usize {
        self.groups
            .iter()
            .map(|g| {
                g.binary_search_by_key(&(w as u32, k as u32), |e| (e.0, e.1))
                    .map_or(0, |i| g[i].2 as usize)
            })
            .sum()
    }
}

/// Everything computed for one source, kept for inspection in tests.
#[derive(Debug, Clone)]
pub struct RowBuild {
    pub source: usize,
    pub p_prime: FxHashMap<u32, f64>,
    /// Candidate set, ascending.
    pub candidates: Vec<usize>,
    pub counts: WalkVisitCounts,
    /// Pushes of the stored candidates, same order as `entries`.
    pub pushes: Vec<PushState>,
    pub entries: Vec<(u32, f64)>,
}

pub(crate) struct Params {
    pub steps: usize,
    pub eps: f64,
    pub r_max: f64,
    pub seed: u64,
    pub groups: usize,
}

impl Params {
    fn new(g: &Graph, steps: usize, cfg: &SketchConfig) -> Self {
        let (n, m) = (g.n() as f64, g.m() as f64);
        Self {
            steps,
            eps: cfg.eps,
            r_max: steps as f64 * cfg.eps * (n / m).sqrt(),
            seed: cfg.seed,
            groups: cfg.groups.unwrap_or_else(|| default_groups(g.n())).max(1),
        }
    }

    /// `ceil(L^2 ln n / eps)`.
    fn candidate_walks(&self, n: usize) -> usize {
        let l = self.steps as f64;
        ((l * l * (n as f64).ln() / self.eps).ceil() as usize).max(1)
    }

    /// `ceil(L / eps^2 * r_max * d_u * ln n)`.
    fn refine_walks(&self, n: usize, d_u: usize) -> usize {
        let l = self.steps as f64;
        ((l / (self.eps * self.eps) * self.r_max * d_u as f64 * (n as f64).ln()).ceil() as usize).max(1)
    }
}

fn candidate_mass<G: Adjacency + ?Sized>(g: &G, u: usize, p: &Params) -> FxHashMap<u32, f64> {
    let walks = p.candidate_walks(g.num_vertices());
    let inc = 0.5 / walks as f64;
    let mut visits: FxHashMap<u32, u64> = FxHashMap::default();
    for j in 0..walks {
        let mut rng = walk_rng(p.seed, tag::SKETCH_CANDIDATES, u, j as u64);
        let mut w = u;
        *visits.entry(w as u32).or_insert(0) += 1;
        for _ in 0..p.steps {
            w = lazy_step(g, w, &mut rng);
            *visits.entry(w as u32).or_insert(0) += 1;
        }
    }
    visits.into_iter().map(|(w, c)| (w, c as f64 * inc)).collect()
}

fn visit_counts<G: Adjacency + ?Sized>(g: &G, u: usize, p: &Params) -> WalkVisitCounts {
    let walks = p.refine_walks(g.num_vertices(), g.degree(u));
    let groups = p.groups.min(walks);
    let width = p.steps as u64 + 1;
    let mut group_walks = Vec::with_capacity(groups);
    let mut out = Vec::with_capacity(groups);
    for i in 0..groups {
        let range = i * walks / groups..(i + 1) * walks / groups;
        group_walks.push(range.len());
        let mut counts: FxHashMap<u64, u32> = FxHashMap::default();
        for j in range {
            let mut rng = walk_rng(p.seed, tag::SKETCH_REFINE, u, j as u64);
            let mut w = u;
            for k in 0..=p.steps {
                *counts.entry(w as u64 * width + k as u64).or_insert(0) += 1;
                if k < p.steps {
                    w = lazy_step(g, w, &mut rng);
                }
            }
        }
        let mut list: Vec<(u32, u32, u32)> =
            counts.into_iter().map(|(key, c)| ((key / width) as u32, (key % width) as u32, c)).collect();
        list.sort_unstable();
        out.push(list);
    }
    WalkVisitCounts { source: u, steps: p.steps, group_walks, groups: out }
}

/// `p_hat_{L,u}(v) = q_v(u) d_v / d_u + d_v sum_k median_g mean_g(prefix_v(W_k, L - k))`
/// using the residuals pushed from `v` and walks from `u`.
pub fn row_entry(counts: &WalkVisitCounts, push_v: &PushState, d_u: usize, d_v: usize) -> f64 {
    let steps = counts.steps;
    let prefix = push_v.residual_prefix();
    let groups = counts.groups.len();
    let mut sums = vec![vec![0.0; groups]; steps + 1];
    for (gi, group) in counts.groups.iter().enumerate() {
        for &(w, k, c) in group {
            if let Some(row) = prefix.row(w as usize) {
                sums[k as usize][gi] += row[steps - k as usize] * c as f64;
            }
        }
    }
    let mut refined = 0.0;
    for per_k in sums.iter_mut() {
        for (gi, v) in per_k.iter_mut().enumerate() {
            *v /= counts.group_walks[gi] as f64;
        }
        refined += median(per_k);
    }
    push_v.q_at(counts.source) * d_v as f64 / d_u as f64 + d_v as f64 * refined
}

fn row_for<G: Adjacency + ?Sized>(g: &G, u: usize, p: &Params) -> Result<RowBuild> {
    let d_u = g.degree(u);
    let p_prime = candidate_mass(g, u, p);
    let mut candidates: Vec<usize> =
        p_prime.iter().filter(|(_, &m)| m > p.eps / 2.0).map(|(&w, _)| w as usize).collect();
    candidates.sort_unstable();
    let counts = visit_counts(g, u, p);
    let mut pushes = Vec::new();
    let mut entries = Vec::new();
    for &v in &candidates {
        let d_v = g.degree(v);
        if d_v > d_u {
            continue;
        }
        let scale = p_prime[&(v as u32)].max(p.eps / 2.0);
        let push = cgd(g, v, p.steps, p.r_max / (2.0 * scale))?;
        entries.push((v as u32, row_entry(&counts, &push, d_u, d_v)));
        pushes.push(push);
    }
    Ok(RowBuild { source: u, p_prime, candidates, counts, pushes, entries })
}

fn check(g: &Graph, cfg: &SketchConfig) -> Result<()> {
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {}", cfg.eps)));
    }
    if !g.is_connected() {
        return Err(Error::NotConnected);
    }
    Ok(())
}

/// All intermediate data for one source row.
pub fn build_row(g: &Graph, u: usize, steps: usize, cfg: &SketchConfig) -> Result<RowBuild> {
    check(g, cfg)?;
    g.check_vertex(u)?;
    if steps < 1 {
        return Err(Error::InvalidParameter("index needs L >= 1".into()));
    }
    row_for(g, u, &Params::new(g, steps, cfg))
}

/// Builds every row. Rows depend only on `(seed, u)`, so the result is the
/// same for any worker count.
pub fn build_index(g: &Graph, cfg: &SketchConfig) -> Result<(ERSketch, Option<SpectralStats>)> {
    check(g, cfg)?;
    let (steps, spectral) = cfg.truncation.resolve(g, cfg.eps)?;
    if steps < 1 {
        return Err(Error::InvalidParameter("index needs L >= 1".into()));
    }
    let p = Params::new(g, steps, cfg);
    let one = |u: usize| row_for(g, u, &p).map(|r| r.entries);
    let rows: Vec<Vec<(u32, f64)>> = if cfg.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| (0..g.n()).into_par_iter().map(one).collect::<Result<_>>())?
    } else {
        (0..g.n()).map(one).collect::<Result<_>>()?
    };
    let sketch = ERSketch {
        n: g.n(),
        m: g.m(),
        steps,
        eps: cfg.eps,
        r_max: p.r_max,
        seed: cfg.seed,
        degrees: (0..g.n()).map(|u| g.degree(u) as u64).collect(),
        rows,
    };
    Ok((sketch, spectral))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_er, exact_p_l};
    use crate::generate::random_regular;

    #[test]
    fn k2_rows() {
        let g = Graph::parse_edge_list("0 1").unwrap();
        let cfg = SketchConfig { truncation: Truncation::Fixed(3), ..SketchConfig::new(0.1, 4) };
        let (sk, _) = build_index(&g, &cfg).unwrap();
        let p = exact_p_l(&g, 0, 3).unwrap();
        assert!((sk.entry(0, 0).unwrap() - p[0]).abs() <= 0.1);
        assert!(sk.entry(1, 1).is_some());
        assert!((sk.query(0, 1).unwrap() - 1.0).abs() <= 0.9);
    }

    #[test]
    fn visit_counts_are_shared_and_consistent() {
        let g = random_regular(60, 8, 2).unwrap();
        let cfg = SketchConfig::new(0.4, 9);
        let row = build_row(&g, 5, 4, &cfg).unwrap();
        let walks = row.counts.total_walks();
        assert!(row.counts.per_step_totals().iter().all(|&t| t == walks));
        assert!(row.candidates.contains(&5));
        for (push, &(v, value)) in row.pushes.iter().zip(&row.entries) {
            let again = row_entry(&row.counts, push, g.degree(5), g.degree(v as usize));
            assert_eq!(again.to_bits(), value.to_bits());
        }
    }

    #[test]
    fn worker_count_does_not_change_rows() {
        let g = random_regular(40, 6, 1).unwrap();
        let base = SketchConfig { truncation: Truncation::Fixed(4), ..SketchConfig::new(0.3, 2) };
        let (a, _) = build_index(&g, &base).unwrap();
        let (b, _) = build_index(&g, &SketchConfig { workers: 3, ..base.clone() }).unwrap();
        let (c, _) = build_index(&g, &base).unwrap();
        assert!(a.bit_identical(&b) && a.bit_identical(&c));
    }

    #[test]
    fn queries_track_exact_values() {
        let g = random_regular(50, 10, 3).unwrap();
        let cfg = SketchConfig { truncation: Truncation::Tight, ..SketchConfig::new(0.2, 1) };
        let (sk, _) = build_index(&g, &cfg).unwrap();
        for (s, t) in [(0, 1), (4, 30), (12, 49)] {
            let exact = exact_er(&g, s, t).unwrap().value;
            let got = sk.query(s, t).unwrap();
            assert!((got - exact).abs() <= 9.0 * 0.2 * exact, "{s} {t}: {got} vs {exact}");
            assert_eq!(got, sk.query(t, s).unwrap());
        }
    }

    #[test]
    fn rejects_bad_input() {
        let g = Graph::parse_edge_list("0 1\n2 3").unwrap();
        assert!(matches!(build_index(&g, &SketchConfig::new(0.1, 0)), Err(Error::NotConnected)));
        let k2 = Graph::parse_edge_list("0 1").unwrap();
        assert!(build_index(&k2, &SketchConfig::new(1.5, 0)).is_err());
    }
}
