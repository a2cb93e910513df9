//! Level-by-level deterministic push for `p_{L,u}`.
//!
//! The state keeps an approximation `q` and residuals `r_0..r_L` such that
//! `p_{L,u} = q + sum_i sum_{k=i}^{L} M^{k-i} r_i` at every step, where
//! `M = (I + P)/2` is the lazy walk operator. Pushing `w` at level `i` moves
//! `r_i(w)` into `q(w)` and spreads `M r_i(w) e_w` into level `i + 1`; mass
//! pushed out of level `L` is dropped. Levels are drained in order, each one
//! with a FIFO queue of entries above `r_max * d_w / L^2`.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::exact::{exact_p_l, lazy_apply};
use crate::graph::{Adjacency, Graph};

pub type SparseVec = FxHashMap<u32, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct PushState {
    pub source: usize,
    pub steps: usize,
    pub r_max: f64,
    pub q: SparseVec,
    /// `residuals[i][w] = r_i(w)`, `steps + 1` levels.
    pub residuals: Vec<SparseVec>,
    pub pushes: u64,
    /// Sum of degrees of pushed vertices, i.e. neighbor visits.
    pub edge_work: u64,
    /// Degrees of every vertex the push has touched.
    pub degrees: FxHashMap<u32, u32>,
}

impl PushState {
    /// The state before any push: `r_0 = e_u / 2`.
    pub fn initial(source: usize, degree: usize, steps: usize, r_max: f64) -> Self {
        let mut residuals = vec![SparseVec::default(); steps + 1];
        residuals[0].insert(source as u32, 0.5);
        let mut degrees = FxHashMap::default();
        degrees.insert(source as u32, degree as u32);
        Self {
            source,
            steps,
            r_max,
            q: SparseVec::default(),
            residuals,
            pushes: 0,
            edge_work: 0,
            degrees,
        }
    }

    /// Per-vertex push threshold `r_max * d_w / L^2`.
    pub fn threshold(&self, degree: usize) -> f64 {
        let l = self.steps.max(1) as f64;
        self.r_max * degree as f64 / (l * l)
    }

    pub fn q_at(&self, w: usize) -> f64 {
        self.q.get(&(w as u32)).copied().unwrap_or(0.0)
    }

    pub fn residual_at(&self, level: usize, w: usize) -> f64 {
        self.residuals[level].get(&(w as u32)).copied().unwrap_or(0.0)
    }

    /// `|q|_1 + sum_i (L - i + 1) |r_i|_1`, which the push keeps at
    /// `(L + 1) / 2` because `M` preserves mass.
    pub fn weighted_mass(&self) -> f64 {
        let l = self.steps;
        let q: f64 = self.q.values().sum();
        let r: f64 = self
            .residuals
            .iter()
            .enumerate()
            .map(|(i, level)| (l - i + 1) as f64 * level.values().sum::<f64>())
            .sum();
        q + r
    }

    pub fn residual_prefix(&self) -> ResidualPrefix {
        ResidualPrefix::new(self)
    }
}

/// Resumable push. [`Cgd::step`] performs one push so callers can inspect
/// intermediate states.
pub struct Cgd<'g, G: Adjacency + ?Sized> {
    g: &'g G,
    state: PushState,
    level: usize,
    queue: VecDeque<u32>,
    /// Entries of level `level + 1` that already crossed the threshold, in
    /// crossing order.
    next_queue: VecDeque<u32>,
}

impl<'g, G: Adjacency + ?Sized> Cgd<'g, G> {
    pub fn new(g: &'g G, u: usize, steps: usize, r_max: f64) -> Result<Self> {
        if u >= g.num_vertices() {
            return Err(Error::VertexOutOfRange { vertex: u, n: g.num_vertices() });
        }
        if steps < 1 {
            return Err(Error::InvalidParameter("push needs L >= 1".into()));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidParameter(format!("r_max must be positive, got {r_max}")));
        }
        let state = PushState::initial(u, g.degree(u), steps, r_max);
        let mut queue = VecDeque::new();
        if 0.5 > state.threshold(state.degrees[&(u as u32)] as usize) {
            queue.push_back(u as u32);
        }
        Ok(Self { g, state, level: 0, queue, next_queue: VecDeque::new() })
    }

    fn degree_of(&mut self, w: u32) -> usize {
        let g = self.g;
        *self.state.degrees.entry(w).or_insert_with(|| g.degree(w as usize) as u32) as usize
    }

    fn add_next(&mut self, w: u32, amount: f64) {
        let level = self.level + 1;
        if level > self.state.steps {
            return;
        }
        let degree = self.degree_of(w);
        let threshold = self.state.threshold(degree);
        let slot = self.state.residuals[level].entry(w).or_insert(0.0);
        let before = *slot;
        *slot += amount;
        if before <= threshold && *slot > threshold {
            self.next_queue.push_back(w);
        }
    }

    /// One push. Returns `false` once every level is below threshold.
    pub fn step(&mut self) -> bool {
        loop {
            if let Some(w) = self.queue.pop_front() {
                let level = self.level;
                let value = self.state.residuals[level].remove(&w).unwrap_or(0.0);
                debug_assert!(value > self.state.threshold(self.state.degrees[&w] as usize));
                *self.state.q.entry(w).or_insert(0.0) += value;
                let g = self.g;
                let degree = self.degree_of(w);
                self.add_next(w, value / 2.0);
                let share = value / (2.0 * degree as f64);
                for i in 0..degree {
                    let v = g.neighbor(w as usize, i) as u32;
                    self.add_next(v, share);
                }
                self.state.pushes += 1;
                self.state.edge_work += degree as u64;
                return true;
            }
            if self.level == self.state.steps {
                return false;
            }
            self.level += 1;
            std::mem::swap(&mut self.queue, &mut self.next_queue);
        }
    }

    pub fn state(&self) -> &PushState {
        &self.state
    }

    pub fn run(mut self) -> PushState {
        while self.step() {}
        self.state
    }
}

/// Runs the push for `p_{L,u}` to completion.
pub fn cgd<G: Adjacency + ?Sized>(g: &G, u: usize, steps: usize, r_max: f64) -> Result<PushState> {
    Ok(Cgd::new(g, u, steps, r_max)?.run())
}

/// Max absolute entry of `p_{L,u} - q - sum_i sum_{k=i}^{L} M^{k-i} r_i`.
pub fn verify_invariant(g: &Graph, state: &PushState) -> Result<f64> {
    let n = g.n();
    let l = state.steps;
    let p = exact_p_l(g, state.source, l)?;
    let mut acc = vec![0.0; n];
    for (&w, &v) in &state.q {
        acc[w as usize] += v;
    }
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; n];
    for i in 0..=l {
        if state.residuals[i].is_empty() {
            continue;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        for (&w, &v) in &state.residuals[i] {
            x[w as usize] = v;
        }
        for k in i..=l {
            acc.iter_mut().zip(&x).for_each(|(a, b)| *a += b);
            if k < l {
                lazy_apply(g, &x, &mut next);
                std::mem::swap(&mut x, &mut next);
            }
        }
    }
    Ok(p.iter().zip(&acc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// `prefix[w][j] = sum_{i <= j} r_i(w) / d_w` for every `w` with a nonzero
/// residual; other vertices are implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPrefix {
    steps: usize,
    slots: FxHashMap<u32, u32>,
    values: Vec<f64>,
}

impl ResidualPrefix {
    fn new(state: &PushState) -> Self {
        let width = state.steps + 1;
        let mut vertices: Vec<u32> = state
            .residuals
            .iter()
            .flat_map(|level| level.iter().filter(|(_, &v)| v > 0.0).map(|(&w, _)| w))
            .collect();
        vertices.sort_unstable();
        vertices.dedup();
        let mut slots = FxHashMap::default();
        let mut values = vec![0.0; vertices.len() * width];
        for (slot, &w) in vertices.iter().enumerate() {
            slots.insert(w, slot as u32);
            let degree = state.degrees[&w] as f64;
            let row = &mut values[slot * width..(slot + 1) * width];
            let mut sum = 0.0;
            for (j, level) in state.residuals.iter().enumerate() {
                sum += level.get(&w).copied().unwrap_or(0.0) / degree;
                row[j] = sum;
            }
        }
        Self { steps: state.steps, slots, values }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    #[inline]
    pub fn row(&self, w: usize) -> Option<&[f64]> {
        let width = self.steps + 1;
        self.slots.get(&(w as u32)).map(|&s| {
            let s = s as usize;
            &self.values[s * width..(s + 1) * width]
        })
    }

    #[inline]
    pub fn get(&self, w: usize, j: usize) -> f64 {
        self.row(w).map_or(0.0, |r| r[j])
    }

    /// Vertices with a stored row, ascending.
    pub fn vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.slots.keys().map(|&w| w as usize).collect();
        v.sort_unstable();
        v
    }
}
