//! The two-graph hard instance and a numerical check of its resistance gap.
//!
//! Layout shared by both graphs: `S1 = 0..n1` is a random `d`-regular graph,
//! `S2 = n1..n1+n2` are extra vertices, `s = n1 + n2`, `t = n1 + n2 + 1`, and
//! `t` is joined to every vertex of `S1` and `S2`. In `G1` all `d_s` neighbors
//! of `s` lie in `S1`; in `G2` only `x = ceil((1 - eps) d_s)` do and the rest
//! are in `S2`. Both graphs use the same expander and the same random order
//! of `S1`, so they differ only around `s`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{dense_cap, parallel_check, resistance};
use crate::generate::{permutation, random_regular};
use crate::graph::{Adjacency, Graph};
use crate::rng::WalkRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundParams {
    pub n1: usize,
    pub n2: usize,
    pub d: usize,
    pub d_s: usize,
    pub eps: f64,
    pub seed: u64,
}

/// The asymptotic conditions of the construction. Recorded, never enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constraints {
    /// `d >= max(d_s ln n1, ln^2 n1)`.
    pub degree_large: bool,
    /// `n1 >= 2 d^3`.
    pub expander_large: bool,
    /// `d_s >> 1/eps`, read as `d_s * eps >= 10`.
    pub source_degree_large: bool,
}

impl Constraints {
    pub fn all(&self) -> bool {
        self.degree_large && self.expander_large && self.source_degree_large
    }
}

impl LowerBoundParams {
    /// `n2` defaults to `ceil(2 eps d_s)`.
    pub fn new(n1: usize, d: usize, d_s: usize, eps: f64, seed: u64) -> Self {
        let n2 = (2.0 * eps * d_s as f64).ceil() as usize;
        Self { n1, n2, d, d_s, eps, seed }
    }

    /// Neighbors of `s` inside `S1` in `G2`.
    pub fn x_g2(&self) -> usize {
        // The small offset keeps exact products such as 0.9 * 10 from
        // rounding up past the integer.
        (((1.0 - self.eps) * self.d_s as f64) - 1e-9).ceil().max(0.0) as usize
    }

    pub fn total_vertices(&self) -> usize {
        self.n1 + self.n2 + 2
    }

    pub fn s(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn t(&self) -> usize {
        self.n1 + self.n2 + 1
    }

    pub fn constraints(&self) -> Constraints {
        let ln = (self.n1 as f64).ln();
        let d = self.d as f64;
        Constraints {
            degree_large: d >= (self.d_s as f64 * ln).max(ln * ln),
            expander_large: self.n1 as f64 >= 2.0 * d.powi(3),
            source_degree_large: self.d_s as f64 * self.eps >= 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut violated = Vec::new();
        if !(self.eps > 0.0 && self.eps < 1.0) {
            violated.push(format!("0 < eps < 1 (eps = {})", self.eps));
        }
        if self.d_s == 0 {
            violated.push("d_s >= 1".to_string());
        }
        if self.d_s > self.n1 {
            violated.push(format!("x = d_s <= n1 ({} > {})", self.d_s, self.n1));
        }
        let x = self.x_g2();
        if self.d_s.saturating_sub(x) > self.n2 {
            violated.push(format!("d_s - x <= n2 ({} > {})", self.d_s - x, self.n2));
        }
        if self.d == 0 || self.d >= self.n1 {
            violated.push(format!("0 < d < n1 (d = {}, n1 = {})", self.d, self.n1));
        }
        if (self.n1 * self.d) % 2 == 1 {
            violated.push(format!("n1 * d even ({} * {})", self.n1, self.d));
        }
        if violated.is_empty() {
            Ok(())
        } else {
            Err(Error::Infeasible(violated.join("; ")))
        }
    }

    /// Largest `d` under the dense cap with `n1 = 2 d^3` and the smallest
    /// admissible `d_s = max(2, ceil(1/eps))`, which maximises
    /// `d / (d_s ln n1)` among instances meeting `n1 >= 2 d^3`.
    pub fn most_faithful(eps: f64, cap: usize, seed: u64) -> Result<Self> {
        let d_s = ((1.0 / eps).ceil() as usize).max(2);
        let mut best = None;
        for d in 2.. {
            let n1 = 2 * d * d * d;
            let p = Self::new(n1, d, d_s, eps, seed);
            if p.total_vertices() > cap {
                break;
            }
            if p.validate().is_ok() {
                best = Some(p);
            }
        }
        best.ok_or_else(|| Error::Infeasible(format!("no instance with n1 = 2 d^3 fits under {cap} vertices")))
    }
}

#[derive(Debug, Clone)]
pub struct LowerBoundPair {
    pub g1: Graph,
    pub g2: Graph,
    pub s: usize,
    pub t: usize,
    pub params: LowerBoundParams,
}

impl LowerBoundPair {
    pub fn s1(&self) -> Vec<usize> {
        (0..self.params.n1).collect()
    }

    pub fn s2(&self) -> Vec<usize> {
        (self.params.n1..self.params.n1 + self.params.n2).collect()
    }
}

pub fn build_pair(params: &LowerBoundParams) -> Result<LowerBoundPair> {
    params.validate()?;
    let p = *params;
    let expander = random_regular(p.n1, p.d, p.seed)?;
    let order = permutation(p.n1, &mut WalkRng::new(p.seed).derive(0x5e1ec7));
    let (s, t) = (p.s(), p.t());
    let mut shared: Vec<(usize, usize)> = expander.edges().collect();
    shared.extend((0..p.n1 + p.n2).map(|v| (v, t)));

    let mut e1 = shared.clone();
    e1.extend(order[..p.d_s].iter().map(|&v| (s, v)));
    let x = p.x_g2();
    let mut e2 = shared;
    e2.extend(order[..x].iter().map(|&v| (s, v)));
    e2.extend((p.n1..p.n1 + (p.d_s - x)).map(|v| (s, v)));

    let n = p.total_vertices();
    Ok(LowerBoundPair {
        g1: Graph::from_edges(n, &e1)?,
        g2: Graph::from_edges(n, &e2)?,
        s,
        t,
        params: p,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub r_g1: f64,
    pub r_g2: f64,
    pub r_s1: f64,
    pub r_s2: f64,
    /// `2 / (d_s - x)`.
    pub r_s2_closed_form: f64,
    pub r_s2_defect: f64,
    /// Relative defect of `1/r_g2 = 1/r_s1 + 1/r_s2`.
    pub parallel_defect: f64,
    /// `|r_g1 - r_g2| / r_g1`.
    pub gap_ratio: f64,
    /// Whether the ratio exceeds `eps / 4`.
    pub gap_holds: bool,
    /// `d_s * r_g1`, near 1 for a good expander.
    pub scaled_r_g1: f64,
    pub x: usize,
    pub constraints: Constraints,
    pub constraints_ok: bool,
    pub params: LowerBoundParams,
}

pub fn verify_gap(pair: &LowerBoundPair) -> Result<GapReport> {
    let p = pair.params;
    let cap = dense_cap();
    if p.total_vertices() > cap {
        return Err(Error::DenseCapExceeded { n: p.total_vertices(), cap });
    }
    let r_g1 = resistance(&pair.g1, pair.s, pair.t)?;
    let split = parallel_check(&pair.g2, pair.s, pair.t, &pair.s1(), &pair.s2())?;
    let x = p.x_g2();
    let closed = if x < p.d_s { 2.0 / (p.d_s - x) as f64 } else { f64::INFINITY };
    let r_s2_defect = if closed.is_finite() { (split.r_s2 - closed).abs() } else { 0.0 };
    let gap_ratio = (r_g1 - split.r_full).abs() / r_g1;
    let constraints = p.constraints();
    Ok(GapReport {
        r_g1,
        r_g2: split.r_full,
        r_s1: split.r_s1,
        r_s2: split.r_s2,
        r_s2_closed_form: closed,
        r_s2_defect,
        parallel_defect: split.identity_defect(),
        gap_ratio,
        gap_holds: gap_ratio > p.eps / 4.0,
        scaled_r_g1: p.d_s as f64 * r_g1,
        x,
        constraints,
        constraints_ok: constraints.all(),
        params: p,
    })
}

/// Structural checks on a generated pair; returns a description of the first
/// violation.
pub fn check_structure(pair: &LowerBoundPair) -> Result<()> {
    let p = pair.params;
    let fail = |m: String| Err(Error::Structure(m));
    for (name, g) in [("G1", &pair.g1), ("G2", &pair.g2)] {
        if !g.is_connected() {
            return fail(format!("{name} is disconnected"));
        }
        if g.degree(pair.t) != p.n1 + p.n2 {
            return fail(format!("{name}: t has degree {}", g.degree(pair.t)));
        }
        if g.has_edge(pair.s, pair.t) {
            return fail(format!("{name} has an s-t edge"));
        }
        if g.degree(pair.s) != p.d_s {
            return fail(format!("{name}: s has degree {}", g.degree(pair.s)));
        }
    }
    if pair.g1.neighbors(pair.s).iter().any(|&v| v as usize >= p.n1) {
        return fail("G1: s has a neighbor outside S1".into());
    }
    let inside = pair.g2.neighbors(pair.s).iter().filter(|&&v| (v as usize) < p.n1).count();
    if inside != p.x_g2() {
        return fail(format!("G2: s has {inside} neighbors in S1, expected {}", p.x_g2()));
    }
    for &v in pair.g2.neighbors(pair.s) {
        let v = v as usize;
        if v >= p.n1 && pair.g2.degree(v) != 2 {
            return fail(format!("G2: chosen S2 vertex {v} has degree {}", pair.g2.degree(v)));
        }
    }
    Ok(())
}
