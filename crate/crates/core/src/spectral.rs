//! Spectral parameters of the normalized Laplacian and the truncation length
//! they imply.
//!
//! Eigenvalues are found with Lanczos on the lazy operator
//! `M = (I + D^{-1/2} A D^{-1/2}) / 2`, whose spectrum is `1 - lambda/2` for
//! normalized-Laplacian eigenvalues `lambda`. The top eigenvector
//! `D^{1/2} 1` is projected out, so the largest Ritz value gives `lambda_2`
//! and the smallest gives `lambda_max`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph};
use crate::rng::WalkRng;

pub const DEFAULT_TOL: f64 = 1e-4;
pub const MAX_ITER_CAP: usize = 100_000;
const DEFAULT_ITER: usize = 500;
const START_SEED: u64 = 0x5eed_1a2c;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralStats {
    pub lambda2: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub iterations: usize,
}

/// Lanczos estimate of `lambda_2` and `kappa = lambda_max / lambda_2`.
/// Converged when the Ritz residual bound of both extreme values is below
/// `tol` relative to the eigenvalue it bounds. `max_iter` defaults to
/// `min(n - 1, 500)` and is clamped to [`MAX_ITER_CAP`].
pub fn estimate_spectral(g: &Graph, tol: f64, max_iter: Option<usize>) -> Result<SpectralStats> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidParameter("spectral estimate needs at least 2 vertices".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if !g.is_connected() {
        return Err(Error::NotConnected);
    }
    let dim = n - 1;
    let max_iter = max_iter.unwrap_or(DEFAULT_ITER.min(dim)).clamp(1, MAX_ITER_CAP).min(dim);

    let two_m = 2.0 * g.m() as f64;
    let sqrt_deg: Vec<f64> = (0..n).map(|u| (g.degree(u) as f64).sqrt()).collect();
    let phi0: Vec<f64> = sqrt_deg.iter().map(|s| s / two_m.sqrt()).collect();
    let inv_sqrt_deg: Vec<f64> = sqrt_deg.iter().map(|s| 1.0 / s).collect();

    let apply = |x: &[f64], y: &mut [f64]| {
        for u in 0..n {
            let mut acc = 0.0;
            for &v in g.neighbors(u) {
                acc += x[v as usize] * inv_sqrt_deg[v as usize];
            }
            y[u] = 0.5 * (x[u] + acc * inv_sqrt_deg[u]);
        }
    };

    let mut rng = WalkRng::new(START_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.unit() * 2.0 - 1.0).collect();
    orthogonalize(&mut v, std::iter::once(phi0.as_slice()));
    normalize(&mut v);

    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut best = (f64::NAN, f64::NAN);

    for j in 0..max_iter {
        apply(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        // Full reorthogonalization, twice, keeps the basis orthonormal.
        for _ in 0..2 {
            orthogonalize(&mut w, std::iter::once(phi0.as_slice()).chain(basis.iter().map(|b| b.as_slice())));
        }
        let b = norm(&w);
        let exhausted = b < 1e-12 || j + 1 == dim;
        let check = exhausted || j + 1 == max_iter || j < 20 || (j + 1) % 10 == 0;
        if check {
            let ritz = ritz_extremes(&alpha, &beta, b);
            let lambda2 = (2.0 * (1.0 - ritz.top)).clamp(f64::MIN_POSITIVE, 2.0);
            let lambda_max = (2.0 * (1.0 - ritz.bottom)).clamp(lambda2, 2.0);
            best = (lambda2, lambda_max);
            let converged =
                exhausted || (ritz.top_resid <= tol * lambda2 / 2.0 && ritz.bottom_resid <= tol * lambda_max / 2.0);
            if converged {
                return Ok(SpectralStats {
                    lambda2,
                    lambda_max,
                    kappa: lambda_max / lambda2,
                    iterations: j + 1,
                });
            }
        }
        beta.push(b);
        let next: Vec<f64> = w.iter().map(|x| x / b).collect();
        basis.push(next);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        lambda2: best.0,
        kappa: best.1 / best.0,
    })
}

struct RitzExtremes {
    top: f64,
    top_resid: f64,
    bottom: f64,
    bottom_resid: f64,
}

fn ritz_extremes(alpha: &[f64], beta: &[f64], next_beta: f64) -> RitzExtremes {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (mut hi, mut lo) = (0, 0);
    for i in 0..k {
        if eig.eigenvalues[i] > eig.eigenvalues[hi] {
            hi = i;
        }
        if eig.eigenvalues[i] < eig.eigenvalues[lo] {
            lo = i;
        }
    }
    RitzExtremes {
        top: eig.eigenvalues[hi],
        top_resid: next_beta * eig.eigenvectors[(k - 1, hi)].abs(),
        bottom: eig.eigenvalues[lo],
        bottom_resid: next_beta * eig.eigenvectors[(k - 1, lo)].abs(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let s = norm(a);
    a.iter_mut().for_each(|x| *x /= s);
}

fn orthogonalize<'a>(w: &mut [f64], against: impl Iterator<Item = &'a [f64]>) {
    for b in against {
        let c = dot(w, b);
        w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
}

/// How the number of walk steps `L` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Use exactly this many steps.
    Fixed(usize),
    /// `ceil(2 kappa ln(n / eps))`, with `kappa` estimated unless given.
    Kappa(Option<f64>),
    /// Smallest `L` whose truncation error is provably at most `eps * r`.
    Tight,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Kappa(None)
    }
}

/// `ceil(2 kappa ln(n / eps))`, at least 1.
pub fn kappa_steps(n: usize, eps: f64, kappa: f64) -> usize {
    ((2.0 * kappa * (n as f64 / eps).ln()).ceil() as usize).max(1)
}

/// Smallest `L >= 1` with `2 (1 - lambda2/2)^(L+1) / lambda2 <= eps`.
///
/// With `b = D^{-1/2}(e_s - e_t)` the steps beyond `L` contribute at most
/// `|b|^2 mu^(L+1) / lambda2` where `mu = 1 - lambda2/2`, and
/// `|b|^2 = 1/d_s + 1/d_t <= 2 r(s,t)`. So the bound is relative to `r`.
pub fn tight_steps(lambda2: f64, eps: f64) -> usize {
    let mu = 1.0 - lambda2 / 2.0;
    if mu <= 0.0 {
        return 1;
    }
    let needed = (eps * lambda2 / 2.0).ln() / mu.ln() - 1.0;
    (needed.ceil().max(1.0)) as usize
}

impl Truncation {
    /// Resolves to a step count, estimating the spectrum only when needed.
    pub fn resolve(&self, g: &Graph, eps: f64) -> Result<(usize, Option<SpectralStats>)> {
        match *self {
            Truncation::Fixed(l) => Ok((l, None)),
            Truncation::Kappa(Some(kappa)) => {
                if !(kappa >= 1.0) {
                    return Err(Error::InvalidParameter(format!("kappa must be >= 1, got {kappa}")));
                }
                Ok((kappa_steps(g.n(), eps, kappa), None))
            }
            Truncation::Kappa(None) => {
                let stats = estimate_spectral(g, DEFAULT_TOL, None)?;
                Ok((kappa_steps(g.n(), eps, stats.kappa), Some(stats)))
            }
            Truncation::Tight => {
                let stats = estimate_spectral(g, DEFAULT_TOL, None)?;
                // Lower lambda2 slightly so the estimate's own error cannot
                // make L too small.
                let lambda2 = stats.lambda2 * (1.0 - DEFAULT_TOL);
                Ok((tight_steps(lambda2, eps), Some(stats)))
            }
        }
    }
}
