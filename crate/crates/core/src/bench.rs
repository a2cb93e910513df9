//! Sweeps over pairs, eps values and seeds, producing one CSV row per cell.

use std::time::Instant;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::counting::CountingGraph;
use crate::error::{Error, Result};
use crate::estimator::{baseline_mc_er_with, estimate_er_with, EstimatorConfig};
use crate::exact::exact_er;
use crate::graph::Graph;
use crate::sketch::{build_index, SketchConfig};
use crate::spectral::{estimate_spectral, kappa_steps, tight_steps, SpectralStats, Truncation, DEFAULT_TOL};

pub const CSV_HEADER: &str = "algorithm,graph,s,t,eps,L,seed,queries,wall_ns,estimate,exact,rel_error";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Bidir,
    Baseline,
    SketchBuild,
    SketchQuery,
    Exact,
}

impl Algorithm {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.trim() {
            "bidir" => Self::Bidir,
            "baseline" => Self::Baseline,
            "sketch-build" => Self::SketchBuild,
            "sketch-query" => Self::SketchQuery,
            "exact" => Self::Exact,
            other => return Err(Error::InvalidParameter(format!("unknown algorithm {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub graph: String,
    pub s: Option<usize>,
    pub t: Option<usize>,
    pub eps: f64,
    #[serde(rename = "L")]
    pub steps: usize,
    pub seed: u64,
    pub queries: u64,
    pub wall_ns: u64,
    pub estimate: Option<f64>,
    pub exact: Option<f64>,
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub pairs: Vec<(usize, usize)>,
    pub eps_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub truncation: Truncation,
    pub exact: bool,
    pub workers: usize,
}

fn rel_error(estimate: f64, exact: Option<f64>) -> Option<f64> {
    exact.map(|e| (estimate - e).abs() / e)
}

fn steps_for(truncation: Truncation, n: usize, eps: f64, stats: Option<&SpectralStats>) -> usize {
    match (truncation, stats) {
        (Truncation::Fixed(l), _) => l,
        (Truncation::Kappa(Some(k)), _) => kappa_steps(n, eps, k),
        (Truncation::Kappa(None), Some(st)) => kappa_steps(n, eps, st.kappa),
        (Truncation::Tight, Some(st)) => tight_steps(st.lambda2 * (1.0 - DEFAULT_TOL), eps),
        _ => unreachable!("spectral stats are computed whenever the rule needs them"),
    }
}

/// Runs every `(pair, eps, seed, algorithm)` cell. The spectral estimate is
/// computed once. Rows are sorted by `(eps, seed, pair, algorithm)` no matter
/// how cells were scheduled; `sketch-build` rows have no pair and come first
/// within their `(eps, seed)`.
pub fn bench_sweep(g: &Graph, graph_id: &str, cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    for &(s, t) in &cfg.pairs {
        g.check_vertex(s)?;
        g.check_vertex(t)?;
        if s == t || !g.connected(s, t) {
            return Err(Error::InvalidParameter(format!("pair ({s}, {t}) is not a connected pair of distinct vertices")));
        }
    }
    for &eps in &cfg.eps_list {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
        }
    }
    let stats = match cfg.truncation {
        Truncation::Fixed(_) | Truncation::Kappa(Some(_)) => None,
        _ => Some(estimate_spectral(g, DEFAULT_TOL, None)?),
    };
    let mut exact = FxHashMap::default();
    if cfg.exact {
        for &(s, t) in &cfg.pairs {
            let start = Instant::now();
            let value = exact_er(g, s, t)?.value;
            exact.insert((s, t), (value, start.elapsed().as_nanos() as u64));
        }
    }
    let wants = |a| cfg.algorithms.contains(&a);

    // One cell per (eps, seed): the sketch is shared by all pairs of the cell.
    let cells: Vec<(usize, usize)> =
        (0..cfg.eps_list.len()).flat_map(|e| (0..cfg.seeds.len()).map(move |k| (e, k))).collect();
    let run_cell = |&(ei, si): &(usize, usize)| -> Result<Vec<(usize, usize, usize, usize, BenchRecord)>> {
        let eps = cfg.eps_list[ei];
        let seed = cfg.seeds[si];
        let steps = steps_for(cfg.truncation, g.n(), eps, stats.as_ref());
        let est_cfg = EstimatorConfig::new(eps, seed).with_steps(steps);
        let mut out = Vec::new();
        let base = |algorithm, s: Option<usize>, t: Option<usize>| BenchRecord {
            algorithm,
            graph: graph_id.to_string(),
            s,
            t,
            eps,
            steps,
            seed,
            queries: 0,
            wall_ns: 0,
            estimate: None,
            exact: None,
            rel_error: None,
        };
        let sketch = if wants(Algorithm::SketchBuild) || wants(Algorithm::SketchQuery) {
            let sk_cfg = SketchConfig { truncation: Truncation::Fixed(steps.max(1)), ..SketchConfig::new(eps, seed) };
            let start = Instant::now();
            let (sk, _) = build_index(g, &sk_cfg)?;
            let wall = start.elapsed().as_nanos() as u64;
            if wants(Algorithm::SketchBuild) {
                let mut rec = base(Algorithm::SketchBuild, None, None);
                rec.steps = sk.steps;
                rec.wall_ns = wall;
                out.push((0, ei, si, Algorithm::SketchBuild as usize, rec));
            }
            Some(sk)
        } else {
            None
        };
        for (pi, &(s, t)) in cfg.pairs.iter().enumerate() {
            let truth = exact.get(&(s, t)).copied();
            for &alg in &cfg.algorithms {
                let mut rec = base(alg, Some(s), Some(t));
                rec.exact = truth.map(|x| x.0);
                let estimate = match alg {
                    Algorithm::Bidir | Algorithm::Baseline => {
                        let counted = CountingGraph::new(g);
                        let start = Instant::now();
                        let est = if alg == Algorithm::Bidir {
                            estimate_er_with(&counted, s, t, steps, &est_cfg)?
                        } else {
                            baseline_mc_er_with(&counted, s, t, steps, &est_cfg)?
                        };
                        rec.wall_ns = start.elapsed().as_nanos() as u64;
                        rec.queries = counted.counts().total();
                        est.value
                    }
                    Algorithm::SketchQuery => {
                        let sk = sketch.as_ref().expect("sketch built for sketch-query");
                        let start = Instant::now();
                        let v = sk.query(s, t)?;
                        rec.wall_ns = start.elapsed().as_nanos() as u64;
                        v
                    }
                    Algorithm::Exact => match truth {
                        Some((v, ns)) => {
                            rec.wall_ns = ns;
                            v
                        }
                        None => continue,
                    },
                    Algorithm::SketchBuild => continue,
                };
                rec.estimate = Some(estimate);
                rec.rel_error = rel_error(estimate, rec.exact);
                out.push((1 + pi, ei, si, alg as usize, rec));
            }
        }
        Ok(out)
    };
    let nested: Vec<Vec<_>> = if cfg.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run_cell).collect::<Result<_>>())?
    } else {
        cells.iter().map(run_cell).collect::<Result<_>>()?
    };
    let mut rows: Vec<_> = nested.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.1, r.2, r.0, r.3));
    Ok(rows.into_iter().map(|r| r.4).collect())
}

pub fn write_csv<W: std::io::Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    for r in records {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
