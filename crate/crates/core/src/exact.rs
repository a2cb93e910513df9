//! Dense ground truth: exact and truncated resistances, exact `p_{L,u}`,
//! Schur complements and the parallel-resistance identity.
//!
//! Only meant for verification; every routine here is cubic in the number of
//! vertices and refuses graphs above [`dense_cap`].

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph};

pub type DenseMatrix = DMatrix<f64>;

pub const DEFAULT_DENSE_CAP: usize = 5000;
pub const DENSE_CAP_ENV: &str = "ER_TOOLKIT_DENSE_CAP";
/// Above this size [`resistance`] skips the eigendecomposition route.
pub const DUAL_ROUTE_LIMIT: usize = 1000;
const AGREEMENT_TOL: f64 = 1e-8;
const EIGEN_CUTOFF: f64 = 1e-10;

pub fn dense_cap() -> usize {
    parse_cap(std::env::var(DENSE_CAP_ENV).ok().as_deref())
}

fn parse_cap(value: Option<&str>) -> usize {
    value.and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_DENSE_CAP)
}

fn check_cap(n: usize) -> Result<()> {
    check_cap_at(n, dense_cap())
}

fn check_cap_at(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PseudoInverse,
    SubmatrixInverse,
    TruncatedSeries,
    /// `s = t`, no computation done.
    SameVertex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactERResult {
    pub value: f64,
    pub method: Method,
}

pub fn laplacian(g: &Graph) -> DenseMatrix {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for u in 0..n {
        l[(u, u)] = g.degree(u) as f64;
        for &v in g.neighbors(u) {
            l[(u, v as usize)] = -1.0;
        }
    }
    l
}

/// Symmetric, zero row sums and nonpositive off-diagonal, all to `tol`.
pub fn is_laplacian(m: &DenseMatrix, tol: f64) -> bool {
    let n = m.nrows();
    if m.ncols() != n {
        return false;
    }
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            sum += m[(i, j)];
            if (m[(i, j)] - m[(j, i)]).abs() > tol || (i != j && m[(i, j)] > tol) {
                return false;
            }
        }
        if sum.abs() > tol {
            return false;
        }
    }
    true
}

/// Eigenvalues of `I - D^{-1/2} A D^{-1/2}` in ascending order.
pub fn normalized_laplacian_spectrum(g: &Graph) -> Result<Vec<f64>> {
    check_cap(g.n())?;
    let n = g.n();
    let inv: Vec<f64> = (0..n).map(|u| 1.0 / (g.degree(u).max(1) as f64).sqrt()).collect();
    let mut m = DMatrix::<f64>::identity(n, n);
    for u in 0..n {
        if g.degree(u) == 0 {
            m[(u, u)] = 0.0;
        }
        for &v in g.neighbors(u) {
            m[(u, v as usize)] = -inv[u] * inv[v as usize];
        }
    }
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// The connected component containing `s` and where `s` and `t` land in it.
fn component_with(g: &Graph, s: usize, t: usize) -> Result<(Graph, usize, usize)> {
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    let label = g.components();
    if label[s] != label[t] {
        return Err(Error::Disconnected { s, t });
    }
    if label.iter().all(|&c| c == label[s]) {
        return Ok((g.clone(), s, t));
    }
    let members: Vec<usize> = (0..g.n()).filter(|&v| label[v] == label[s]).collect();
    let pos = |x: usize| members.binary_search(&x).unwrap();
    Ok((g.induced_subgraph(&members)?, pos(s), pos(t)))
}

/// `(e_s - e_t)^T L^+ (e_s - e_t)` from a Laplacian eigendecomposition, with
/// eigenvalues below `1e-10 * lambda_max` treated as the kernel.
pub fn er_pinv_matrix(l: &DenseMatrix, s: usize, t: usize) -> f64 {
    let eig = SymmetricEigen::new(l.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let cutoff = EIGEN_CUTOFF * top;
    let mut r = 0.0;
    for k in 0..l.nrows() {
        let lambda = eig.eigenvalues[k];
        if lambda > cutoff {
            let diff = eig.eigenvectors[(s, k)] - eig.eigenvectors[(t, k)];
            r += diff * diff / lambda;
        }
    }
    r
}

/// `(L_g^{-1})_{tt}` where `L_g` drops row and column `ground`.
pub fn er_grounded_matrix(l: &DenseMatrix, ground: usize, t: usize) -> Result<f64> {
    let reduced = l.clone().remove_row(ground).remove_column(ground);
    let idx = if t > ground { t - 1 } else { t };
    let chol = Cholesky::new(reduced)
        .ok_or_else(|| Error::Singular(format!("Laplacian grounded at {ground} is not positive definite")))?;
    let mut e = DVector::zeros(l.nrows() - 1);
    e[idx] = 1.0;
    Ok(chol.solve(&e)[idx])
}

fn prepared(g: &Graph, s: usize, t: usize) -> Result<Option<(DenseMatrix, usize, usize)>> {
    let (h, s, t) = component_with(g, s, t)?;
    if s == t {
        return Ok(None);
    }
    check_cap(h.n())?;
    Ok(Some((laplacian(&h), s, t)))
}

/// Pseudo-inverse route only.
pub fn er_pinv(g: &Graph, s: usize, t: usize) -> Result<f64> {
    Ok(match prepared(g, s, t)? {
        Some((l, s, t)) => er_pinv_matrix(&l, s, t),
        None => 0.0,
    })
}

/// Grounded route: `(L_ground^{-1})_{other,other}` with `ground` one of `s, t`.
pub fn er_grounded(g: &Graph, s: usize, t: usize, ground_at_s: bool) -> Result<f64> {
    match prepared(g, s, t)? {
        Some((l, s, t)) if ground_at_s => er_grounded_matrix(&l, s, t),
        Some((l, s, t)) => er_grounded_matrix(&l, t, s),
        None => Ok(0.0),
    }
}

/// Exact resistance by the pseudo-inverse, cross-checked against the grounded
/// route to `1e-8` relative.
pub fn exact_er(g: &Graph, s: usize, t: usize) -> Result<ExactERResult> {
    let Some((l, s, t)) = prepared(g, s, t)? else {
        return Ok(ExactERResult { value: 0.0, method: Method::SameVertex });
    };
    let pinv = er_pinv_matrix(&l, s, t);
    let grounded = er_grounded_matrix(&l, s, t)?;
    if (pinv - grounded).abs() > AGREEMENT_TOL * pinv.abs().max(grounded.abs()) {
        return Err(Error::OracleMismatch { pinv, grounded });
    }
    Ok(ExactERResult { value: pinv, method: Method::PseudoInverse })
}

/// [`exact_er`] up to [`DUAL_ROUTE_LIMIT`] vertices, the grounded route alone
/// beyond it.
pub fn resistance(g: &Graph, s: usize, t: usize) -> Result<f64> {
    if g.n() <= DUAL_ROUTE_LIMIT {
        exact_er(g, s, t).map(|r| r.value)
    } else {
        er_grounded(g, s, t, true)
    }
}

/// All-pairs resistances of a connected graph from one inverse of the
/// Laplacian grounded at vertex 0: `r(s, t) = G_ss + G_tt - 2 G_st` with the
/// grounded row and column read as zero.
#[derive(Debug, Clone)]
pub struct GroundedInverse {
    inv: DenseMatrix,
}

impl GroundedInverse {
    pub fn new(g: &Graph) -> Result<Self> {
        check_cap(g.n())?;
        if !g.is_connected() {
            return Err(Error::NotConnected);
        }
        let reduced = laplacian(g).remove_row(0).remove_column(0);
        let chol = Cholesky::new(reduced).ok_or_else(|| Error::Singular("grounded Laplacian is not positive definite".into()))?;
        Ok(Self { inv: chol.inverse() })
    }

    fn at(&self, a: usize, b: usize) -> f64 {
        if a == 0 || b == 0 {
            0.0
        } else {
            self.inv[(a - 1, b - 1)]
        }
    }

    pub fn resistance(&self, s: usize, t: usize) -> f64 {
        self.at(s, s) + self.at(t, t) - 2.0 * self.at(s, t)
    }
}

/// `y = (I + P) x / 2` with `P = A D^{-1}`.
pub fn lazy_apply(g: &Graph, x: &[f64], y: &mut [f64]) {
    for v in 0..g.n() {
        let mut acc = 0.0;
        for &w in g.neighbors(v) {
            acc += x[w as usize] / g.degree(w as usize) as f64;
        }
        y[v] = 0.5 * (x[v] + acc);
    }
}

/// `p_{L,u} = 1/2 sum_{l=0}^{L} M^l e_u` as a dense vector.
pub fn exact_p_l(g: &Graph, u: usize, l: usize) -> Result<Vec<f64>> {
    g.check_vertex(u)?;
    let n = g.n();
    let mut x = vec![0.0; n];
    x[u] = 1.0;
    let mut next = vec![0.0; n];
    let mut p: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
    for _ in 0..l {
        lazy_apply(g, &x, &mut next);
        std::mem::swap(&mut x, &mut next);
        p.iter_mut().zip(&x).for_each(|(a, b)| *a += 0.5 * b);
    }
    Ok(p)
}

/// `L`-step truncated resistance, evaluated as the series
/// `1/2 sum_l (D^{-1} chi)^T M^l chi` with `chi = e_s - e_t`.
pub fn truncated_er(g: &Graph, s: usize, t: usize, l: usize) -> Result<f64> {
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    if s == t {
        return Ok(0.0);
    }
    let (ds, dt) = (g.degree(s) as f64, g.degree(t) as f64);
    let mut x = vec![0.0; g.n()];
    x[s] = 1.0;
    x[t] = -1.0;
    let mut next = vec![0.0; g.n()];
    let mut r = 0.5 * (x[s] / ds - x[t] / dt);
    for _ in 0..l {
        lazy_apply(g, &x, &mut next);
        std::mem::swap(&mut x, &mut next);
        r += 0.5 * (x[s] / ds - x[t] / dt);
    }
    Ok(r)
}

/// The four-term recombination of `p_{L,s}` and `p_{L,t}`.
pub fn recombine(ps_s: f64, ps_t: f64, pt_s: f64, pt_t: f64, ds: f64, dt: f64) -> f64 {
    ps_s / ds - ps_t / dt - pt_s / ds + pt_t / dt
}

/// `L[S,S] - L[S,S'] L[S',S']^{-1} L[S',S]`, rows in the order of `set`.
pub fn schur_complement(g: &Graph, set: &[usize]) -> Result<DenseMatrix> {
    let n = g.n();
    check_cap(n)?;
    let mut inside = vec![false; n];
    for &v in set {
        g.check_vertex(v)?;
        if inside[v] {
            return Err(Error::InvalidParameter(format!("vertex {v} listed twice")));
        }
        inside[v] = true;
    }
    if set.is_empty() || set.len() == n {
        return Err(Error::InvalidParameter("Schur complement needs a nonempty proper subset".into()));
    }
    let rest: Vec<usize> = (0..n).filter(|&v| !inside[v]).collect();
    let l = laplacian(g);
    let block = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| l[(rows[i], cols[j])]);
    let l_ss = block(set, set);
    let l_sr = block(set, &rest);
    let l_rr = block(&rest, &rest);
    let chol = Cholesky::new(l_rr).ok_or_else(|| Error::Singular("eliminated block is not invertible".into()))?;
    let solved = chol.solve(&l_sr.transpose());
    Ok(l_ss - l_sr * solved)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParallelResistances {
    pub r_full: f64,
    pub r_s1: f64,
    pub r_s2: f64,
}

impl ParallelResistances {
    /// `|1/r_full - (1/r_s1 + 1/r_s2)|` relative to `1/r_full`.
    pub fn identity_defect(&self) -> f64 {
        let lhs = 1.0 / self.r_full;
        (lhs - (1.0 / self.r_s1 + 1.0 / self.r_s2)).abs() / lhs
    }
}

/// Resistances between `s` and `t` in `g` and in the subgraphs induced by
/// `{s, t} + S1` and `{s, t} + S2`. An empty side has infinite resistance.
pub fn parallel_check(g: &Graph, s: usize, t: usize, s1: &[usize], s2: &[usize]) -> Result<ParallelResistances> {
    let n = g.n();
    g.check_vertex(s)?;
    g.check_vertex(t)?;
    if s == t {
        return Err(Error::Structure("s and t must differ".into()));
    }
    if g.has_edge(s, t) {
        return Err(Error::Structure(format!("edge ({s}, {t}) joins s and t directly")));
    }
    let mut side = vec![0u8; n];
    side[s] = 3;
    side[t] = 3;
    for (mark, set) in [(1u8, s1), (2u8, s2)] {
        for &v in set {
            g.check_vertex(v)?;
            if side[v] != 0 {
                return Err(Error::Structure(format!("vertex {v} appears in more than one part")));
            }
            side[v] = mark;
        }
    }
    if let Some(v) = side.iter().position(|&x| x == 0) {
        return Err(Error::Structure(format!("vertex {v} is in no part")));
    }
    for (u, v) in g.edges() {
        if side[u] ^ side[v] == 3 && side[u] != 3 && side[v] != 3 {
            return Err(Error::Structure(format!("edge ({u}, {v}) crosses between S1 and S2")));
        }
    }
    let side_resistance = |set: &[usize]| -> Result<f64> {
        let mut members = vec![s, t];
        members.extend_from_slice(set);
        let h = g.induced_subgraph(&members)?;
        match resistance(&h, 0, 1) {
            Err(Error::Disconnected { .. }) => Ok(f64::INFINITY),
            other => other,
        }
    };
    Ok(ParallelResistances {
        r_full: resistance(g, s, t)?,
        r_s1: side_resistance(s1)?,
        r_s2: side_resistance(s2)?,
    })
}
