//! Single-pair estimation: push from both endpoints, then refine the four
//! needed entries of `p_{L,s}` and `p_{L,t}` with lazy walks.
//!
//! For a walk `W_0 = v, W_1, ...` and the residuals of source `u`,
//! `p_{L,u}(v) / d_v = q_u(v) / d_v + sum_k E[prefix_u(W_k, L - k)]`,
//! so every walk from `v` yields one unbiased sample per step `k`. Each
//! per-`k` mean is taken as a median over groups of walks.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::recombine;
use crate::graph::{Adjacency, Graph};
use crate::push::{cgd, PushState, ResidualPrefix};
use crate::spectral::{SpectralStats, Truncation};
use crate::rng::WalkRng;
use crate::walk::{lazy_step, tag, walk_rng_base};

const LANES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub eps: f64,
    pub truncation: Truncation,
    pub seed: u64,
    /// Overrides the walk count per source.
    pub walks: Option<usize>,
    /// Overrides the number of median-of-means groups.
    pub groups: Option<usize>,
    pub workers: usize,
}

impl EstimatorConfig {
    pub fn new(eps: f64, seed: u64) -> Self {
        Self {
            eps,
            truncation: Truncation::default(),
            seed,
            walks: None,
            groups: None,
            workers: 1,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.truncation = Truncation::Fixed(steps);
        self
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEstimate {
    pub value: f64,
    /// `[p(s -> s), p(s -> t), p(t -> s), p(t -> t)]` where `p(u -> v)` is
    /// the estimate of `p_{L,u}(v)`.
    pub p_hat: [f64; 4],
    pub walks_used: usize,
    pub pushes_used: u64,
    pub groups: usize,
    pub steps: usize,
    pub eps: f64,
    /// Push threshold parameter; absent for the baseline.
    pub r_max: Option<f64>,
    pub d: usize,
    pub spectral: Option<SpectralStats>,
}

/// `max(1, ceil(log2 n))`.
pub fn default_groups(n: usize) -> usize {
    ((n as f64).log2().ceil() as usize).max(1)
}

/// `ceil(4 L^2 / eps^2 * r_max * d * ln n)`, at least 1.
pub fn pair_walks(steps: usize, eps: f64, r_max: f64, d: usize, n: usize) -> usize {
    let l = steps as f64;
    ((4.0 * l * l / (eps * eps) * r_max * d as f64 * (n as f64).ln()).ceil() as usize).max(1)
}

/// `ceil(4 L^2 / eps^2 * ln n)`, at least 1.
pub fn baseline_walks(steps: usize, eps: f64, n: usize) -> usize {
    let l = steps as f64;
    ((4.0 * l * l / (eps * eps) * (n as f64).ln()).ceil() as usize).max(1)
}

fn check_pair(g: &Graph, s: usize, t: usize, eps: f64) -> Result<()> {
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    if s == t {
        return Err(Error::InvalidParameter("s and t must differ".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !g.connected(s, t) {
        return Err(Error::Disconnected { s, t });
    }
    Ok(())
}

/// Push-plus-walk estimate of `r(s, t)`.
pub fn estimate_er(g: &Graph, s: usize, t: usize, cfg: &EstimatorConfig) -> Result<PairEstimate> {
    check_pair(g, s, t, cfg.eps)?;
    let (steps, spectral) = cfg.truncation.resolve(g, cfg.eps)?;
    let mut out = estimate_er_with(g, s, t, steps, cfg)?;
    out.spectral = spectral;
    Ok(out)
}

/// [`estimate_er`] with `L` already chosen, over any adjacency view. Does no
/// connectivity check.
pub fn estimate_er_with<G: Adjacency + Sync + ?Sized>(
    g: &G,
    s: usize,
    t: usize,
    steps: usize,
    cfg: &EstimatorConfig,
) -> Result<PairEstimate> {
    let n = g.num_vertices();
    let (ds, dt) = (g.degree(s), g.degree(t));
    let d = ds.min(dt);
    let r_max = cfg.eps / (d as f64).sqrt();
    let push = |u: usize, degree: usize| -> Result<PushState> {
        if steps == 0 {
            Ok(PushState::initial(u, degree, 0, r_max))
        } else {
            cgd(g, u, steps, r_max)
        }
    };
    let from_s = push(s, ds)?;
    let from_t = push(t, dt)?;
    let walks = cfg.walks.unwrap_or_else(|| pair_walks(steps, cfg.eps, r_max, d, n));
    finish(g, [s, t], [ds, dt], [&from_s, &from_t], steps, walks, tag::PAIR, cfg, Some(r_max))
}

/// Plain Monte-Carlo estimate: no push, `ceil(4 L^2 / eps^2 ln n)` walks per
/// endpoint counting visits to the other endpoint.
pub fn baseline_mc_er(g: &Graph, s: usize, t: usize, cfg: &EstimatorConfig) -> Result<PairEstimate> {
    check_pair(g, s, t, cfg.eps)?;
    let (steps, spectral) = cfg.truncation.resolve(g, cfg.eps)?;
    let mut out = baseline_mc_er_with(g, s, t, steps, cfg)?;
    out.spectral = spectral;
    Ok(out)
}

pub fn baseline_mc_er_with<G: Adjacency + Sync + ?Sized>(
    g: &G,
    s: usize,
    t: usize,
    steps: usize,
    cfg: &EstimatorConfig,
) -> Result<PairEstimate> {
    let n = g.num_vertices();
    let (ds, dt) = (g.degree(s), g.degree(t));
    let from_s = PushState::initial(s, ds, steps, f64::INFINITY);
    let from_t = PushState::initial(t, dt, steps, f64::INFINITY);
    let walks = cfg.walks.unwrap_or_else(|| baseline_walks(steps, cfg.eps, n));
    finish(g, [s, t], [ds, dt], [&from_s, &from_t], steps, walks, tag::BASELINE, cfg, None)
}

#[allow(clippy::too_many_arguments)]
fn finish<G: Adjacency + Sync + ?Sized>(
    g: &G,
    ends: [usize; 2],
    degrees: [usize; 2],
    states: [&PushState; 2],
    steps: usize,
    walks: usize,
    stream: u64,
    cfg: &EstimatorConfig,
    r_max: Option<f64>,
) -> Result<PairEstimate> {
    if walks == 0 {
        return Err(Error::InvalidParameter("walk count must be positive".into()));
    }
    let groups = cfg.groups.unwrap_or_else(|| default_groups(g.num_vertices())).clamp(1, walks);
    let work = walks.saturating_mul(steps + 1);
    let table = ScoreTable::new(&states[0].residual_prefix(), &states[1].residual_prefix(), g.num_vertices(), work);
    let bound = r_max.filter(|_| steps >= 2);
    // sums[v][u]: refined sum over k for walks from ends[v] and residuals of ends[u].
    let mut sums = [[0.0; 2]; 2];
    for (v, &origin) in ends.iter().enumerate() {
        let refined = refine(g, &table, origin, steps, walks, groups, cfg.seed, stream, cfg.workers, bound)?;
        sums[v] = refined;
    }
    let p = |u: usize, v: usize| states[u].q_at(ends[v]) + degrees[v] as f64 * sums[v][u];
    let p_hat = [p(0, 0), p(0, 1), p(1, 0), p(1, 1)];
    let (ds, dt) = (degrees[0] as f64, degrees[1] as f64);
    Ok(PairEstimate {
        value: recombine(p_hat[0], p_hat[1], p_hat[2], p_hat[3], ds, dt),
        p_hat,
        walks_used: walks,
        pushes_used: states[0].pushes + states[1].pushes,
        groups,
        steps,
        eps: cfg.eps,
        r_max,
        d: degrees[0].min(degrees[1]),
        spectral: None,
    })
}

/// Both residual prefixes under one vertex lookup. The score of a walk at
/// `w` after `k` steps is `(prefix_s[w][L - k], prefix_t[w][L - k])`.
enum ScoreTable {
    /// `scores[k * n + w]`. Costs O(n L) to set up, so it is only used when
    /// that is no more than the walk work it speeds up.
    Dense { n: usize, scores: Vec<[f64; 2]> },
    /// Rows of `2 (L + 1)` values for vertices holding residual mass only.
    Sparse { width: usize, slots: rustc_hash::FxHashMap<u32, u32>, values: Vec<f64> },
}

impl ScoreTable {
    fn new(a: &ResidualPrefix, b: &ResidualPrefix, n: usize, walk_work: usize) -> Self {
        let width = a.steps() + 1;
        let mut vertices = a.vertices();
        vertices.extend(b.vertices());
        vertices.sort_unstable();
        vertices.dedup();
        if n.saturating_mul(width) <= walk_work {
            let mut scores = vec![[0.0; 2]; n * width];
            for &w in &vertices {
                for k in 0..width {
                    scores[k * n + w] = [a.get(w, width - 1 - k), b.get(w, width - 1 - k)];
                }
            }
            return ScoreTable::Dense { n, scores };
        }
        let mut slots = rustc_hash::FxHashMap::default();
        let mut values = vec![0.0; vertices.len() * 2 * width];
        for (slot, &w) in vertices.iter().enumerate() {
            slots.insert(w as u32, slot as u32);
            let row = &mut values[slot * 2 * width..(slot + 1) * 2 * width];
            if let Some(r) = a.row(w) {
                row[..width].copy_from_slice(r);
            }
            if let Some(r) = b.row(w) {
                row[width..].copy_from_slice(r);
            }
        }
        ScoreTable::Sparse { width, slots, values }
    }

    #[inline]
    fn score(&self, w: usize, k: usize) -> Option<[f64; 2]> {
        match self {
            ScoreTable::Dense { n, scores } => Some(scores[k * n + w]),
            ScoreTable::Sparse { width, slots, values } => {
                let at = *slots.get(&(w as u32))? as usize * 2 * width;
                let j = width - 1 - k;
                Some([values[at + j], values[at + width + j]])
            }
        }
    }
}

/// Per-step sums of the walk scores for walks `range` from `origin`.
#[allow(clippy::too_many_arguments)]
fn group_sums<G: Adjacency + ?Sized>(
    g: &G,
    table: &ScoreTable,
    origin: usize,
    steps: usize,
    range: std::ops::Range<usize>,
    seed: u64,
    stream: u64,
    bound: Option<f64>,
) -> Vec<[f64; 2]> {
    let mut acc = vec![[0.0; 2]; steps + 1];
    let add = |slot: &mut [f64; 2], score: [f64; 2]| {
        if let Some(limit) = bound {
            debug_assert!(score[0] <= limit * (1.0 + 1e-12) && score[1] <= limit * (1.0 + 1e-12));
        }
        slot[0] += score[0];
        slot[1] += score[1];
    };
    let base = walk_rng_base(seed, stream, origin);
    let mut j = range.start;
    if let &ScoreTable::Dense { n, ref scores } = table {
        // Walks run LANES at a time so their independent neighbor loads
        // overlap. Each slot still receives its terms in walk order.
        while j + LANES <= range.end {
            let mut rngs: [WalkRng; LANES] = std::array::from_fn(|i| base.derive((j + i) as u64));
            let mut ws = [origin; LANES];
            for (k, (slot, level)) in acc.iter_mut().zip(scores.chunks_exact(n)).enumerate() {
                for &w in &ws {
                    add(slot, level[w]);
                }
                if k < steps {
                    for (w, rng) in ws.iter_mut().zip(rngs.iter_mut()) {
                        *w = lazy_step(g, *w, rng);
                    }
                }
            }
            j += LANES;
        }
    }
    for j in j..range.end {
        let mut rng = base.derive(j as u64);
        let mut w = origin;
        for (k, slot) in acc.iter_mut().enumerate() {
            if let Some(score) = table.score(w, k) {
                add(slot, score);
            }
            if k < steps {
                w = lazy_step(g, w, &mut rng);
            }
        }
    }
    acc
}

/// Median over groups of the per-group means, summed over `k`, for each of the
/// two residual systems.
#[allow(clippy::too_many_arguments)]
fn refine<G: Adjacency + Sync + ?Sized>(
    g: &G,
    table: &ScoreTable,
    origin: usize,
    steps: usize,
    walks: usize,
    groups: usize,
    seed: u64,
    stream: u64,
    workers: usize,
    bound: Option<f64>,
) -> Result<[f64; 2]> {
    let ranges: Vec<std::ops::Range<usize>> = (0..groups).map(|i| i * walks / groups..(i + 1) * walks / groups).collect();
    let run = |r: &std::ops::Range<usize>| group_sums(g, table, origin, steps, r.clone(), seed, stream, bound);
    let per_group: Vec<Vec<[f64; 2]>> = if workers > 1 && groups > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| ranges.par_iter().map(run).collect())
    } else {
        ranges.iter().map(run).collect()
    };
    let mut out = [0.0; 2];
    let mut means = vec![0.0; groups];
    for k in 0..=steps {
        for (system, total) in out.iter_mut().enumerate() {
            for (i, r) in ranges.iter().enumerate() {
                means[i] = per_group[i][k][system] / r.len() as f64;
            }
            *total += median(&mut means);
        }
    }
    Ok(out)
}

/// Median, averaging the two middle values for even lengths.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
