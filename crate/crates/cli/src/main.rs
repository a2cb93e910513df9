use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use er_core::bench::{bench_sweep, write_csv, Algorithm, SweepConfig};
use er_core::exact::{dense_cap, exact_er};
use er_core::lowerbound::{build_pair, check_structure, verify_gap, LowerBoundParams};
use er_core::sketch::save_index;
use er_core::spectral::DEFAULT_TOL;
use er_core::{
    baseline_mc_er, build_index, estimate_er, estimate_spectral, load_index, EstimatorConfig, Graph, SketchConfig,
    Truncation,
};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "er-toolkit", version, about = "Effective resistance: exact, estimated and sketched")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dense ground truth for one pair.
    Exact(PairArgs),
    /// Push-plus-walk estimate for one pair.
    Estimate(EstimateArgs),
    /// Plain Monte-Carlo estimate for one pair.
    Baseline(EstimateArgs),
    /// Precompute the all-pairs sketch and save it.
    BuildIndex(BuildArgs),
    /// Answer one pair from a saved sketch.
    Query(QueryArgs),
    /// Write the two-graph hard instance and its resistance report.
    GenLowerbound(LowerBoundArgs),
    /// Sweep pairs, eps values, seeds and algorithms; CSV on stdout.
    Bench(BenchArgs),
    /// Extremal eigenvalues of the normalized Laplacian.
    Spectral(SpectralArgs),
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Source vertex id as written in the edge list.
    #[arg(long)]
    s: u64,
    #[arg(long)]
    t: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    /// `ceil(2 kappa ln(n / eps))`.
    Kappa,
    /// Smallest `L` with a provable truncation error below `eps * r`.
    Tight,
}

#[derive(Args)]
struct StepArgs {
    /// Number of walk steps; overrides the truncation rule.
    #[arg(long = "L")]
    steps: Option<usize>,
    /// Condition number to use instead of estimating it.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, value_enum, default_value = "kappa")]
    truncation: Rule,
}

impl StepArgs {
    fn truncation(&self) -> Truncation {
        match (self.steps, self.kappa, self.truncation) {
            (Some(l), _, _) => Truncation::Fixed(l),
            (None, Some(k), _) => Truncation::Kappa(Some(k)),
            (None, None, Rule::Kappa) => Truncation::Kappa(None),
            (None, None, Rule::Tight) => Truncation::Tight,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    steps: StepArgs,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    steps: StepArgs,
    #[arg(long)]
    index: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    s: u64,
    #[arg(long)]
    t: u64,
    /// Edge list the index was built from. Without it `s` and `t` are dense
    /// vertex indices (order of first appearance).
    #[arg(long)]
    graph: Option<PathBuf>,
}

#[derive(Args)]
struct LowerBoundArgs {
    #[arg(long, required_unless_present = "most_faithful")]
    n1: Option<usize>,
    #[arg(long, required_unless_present = "most_faithful")]
    d: Option<usize>,
    #[arg(long = "d-s", required_unless_present = "most_faithful")]
    d_s: Option<usize>,
    /// Defaults to `ceil(2 eps d_s)`.
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pick the instance closest to the asymptotic regime under the dense cap.
    #[arg(long, conflicts_with_all = ["n1", "d", "d_s"])]
    most_faithful: bool,
    /// Directory receiving `g1.txt` and `g2.txt`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    graph: PathBuf,
    /// File of `s t` lines.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long = "eps-list", value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "bidir,baseline,exact")]
    algos: Vec<String>,
    #[arg(long)]
    no_exact: bool,
    #[command(flatten)]
    steps: StepArgs,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
}

type Outcome = Result<(), Box<dyn std::error::Error>>;

fn load_graph(path: &Path) -> Result<Graph, Box<dyn std::error::Error>> {
    let file = fs::File::open(path).map_err(|e| format!("cannot open graph {}: {e}", path.display()))?;
    let g = Graph::load_edge_list(BufReader::new(file))?;
    eprintln!(
        "loaded {}: n={} m={} (dropped {} duplicate edges, {} self-loops)",
        path.display(),
        g.n(),
        g.m(),
        g.duplicates_dropped(),
        g.self_loops_dropped()
    );
    Ok(g)
}

fn vertex(g: &Graph, id: u64) -> Result<usize, Box<dyn std::error::Error>> {
    g.dense_id(id).ok_or_else(|| format!("vertex {id} does not occur in the graph").into())
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn exact(a: &PairArgs) -> Outcome {
    let g = load_graph(&a.graph)?;
    let (s, t) = (vertex(&g, a.s)?, vertex(&g, a.t)?);
    let start = Instant::now();
    let r = exact_er(&g, s, t)?;
    print_json(&json!({
        "s": a.s,
        "t": a.t,
        "value": r.value,
        "method": r.method,
        "n": g.n(),
        "m": g.m(),
        "wall_ns": start.elapsed().as_nanos() as u64,
    }))
}

fn estimate(a: &EstimateArgs, baseline: bool) -> Outcome {
    let g = load_graph(&a.pair.graph)?;
    let (s, t) = (vertex(&g, a.pair.s)?, vertex(&g, a.pair.t)?);
    let cfg = EstimatorConfig {
        workers: a.workers.max(1),
        ..EstimatorConfig::new(a.eps, a.seed).with_truncation(a.steps.truncation())
    };
    let est = if baseline { baseline_mc_er(&g, s, t, &cfg)? } else { estimate_er(&g, s, t, &cfg)? };
    eprintln!("L={} walks={} pushes={}", est.steps, est.walks_used, est.pushes_used);
    print_json(&json!({
        "s": a.pair.s,
        "t": a.pair.t,
        "seed": a.seed,
        "estimate": est,
        "value": est.value,
    }))
}

fn build(a: &BuildArgs) -> Outcome {
    let g = load_graph(&a.graph)?;
    let cfg = SketchConfig {
        truncation: a.steps.truncation(),
        workers: a.workers.max(1),
        ..SketchConfig::new(a.eps, a.seed)
    };
    let start = Instant::now();
    let (sk, spectral) = build_index(&g, &cfg)?;
    let wall_ns = start.elapsed().as_nanos() as u64;
    let bytes = save_index(&sk, &a.index)?;
    eprintln!("wrote {} ({bytes} bytes)", a.index.display());
    print_json(&json!({
        "index": a.index,
        "bytes": bytes,
        "n": sk.n,
        "m": sk.m,
        "L": sk.steps,
        "eps": sk.eps,
        "r_max": sk.r_max,
        "seed": sk.seed,
        "stored_entries": sk.stored_entries(),
        "spectral": spectral,
        "wall_ns": wall_ns,
    }))
}

fn query(a: &QueryArgs) -> Outcome {
    if !a.index.exists() {
        return Err(format!("index file {} does not exist; run build-index first", a.index.display()).into());
    }
    let sk = load_index(&a.index)?;
    let (s, t) = match &a.graph {
        Some(path) => {
            let g = load_graph(path)?;
            if g.n() != sk.n || g.m() != sk.m {
                return Err(format!(
                    "graph has n={} m={} but the index was built for n={} m={}",
                    g.n(),
                    g.m(),
                    sk.n,
                    sk.m
                )
                .into());
            }
            (vertex(&g, a.s)?, vertex(&g, a.t)?)
        }
        None => (usize::try_from(a.s)?, usize::try_from(a.t)?),
    };
    let value = sk.query(s, t)?;
    print_json(&json!({ "s": a.s, "t": a.t, "value": value, "L": sk.steps, "eps": sk.eps }))
}

fn gen_lowerbound(a: &LowerBoundArgs) -> Outcome {
    let mut params = if a.most_faithful {
        LowerBoundParams::most_faithful(a.eps, dense_cap(), a.seed)?
    } else {
        LowerBoundParams::new(a.n1.unwrap_or(0), a.d.unwrap_or(0), a.d_s.unwrap_or(0), a.eps, a.seed)
    };
    if let Some(n2) = a.n2 {
        params.n2 = n2;
    }
    let pair = build_pair(&params)?;
    check_structure(&pair)?;
    fs::create_dir_all(&a.out)?;
    let (p1, p2) = (a.out.join("g1.txt"), a.out.join("g2.txt"));
    fs::write(&p1, pair.g1.to_edge_list())?;
    fs::write(&p2, pair.g2.to_edge_list())?;
    eprintln!("wrote {} and {}", p1.display(), p2.display());
    let report = verify_gap(&pair)?;
    print_json(&json!({
        "g1": p1,
        "g2": p2,
        "s": pair.s,
        "t": pair.t,
        "r_g1": report.r_g1,
        "r_g2": report.r_g2,
        "r_s1": report.r_s1,
        "r_s2": report.r_s2,
        "gap_ratio": report.gap_ratio,
        "constraints_ok": report.constraints_ok,
        "report": report,
    }))
}

fn read_pairs(g: &Graph, path: &Path) -> Result<Vec<(usize, usize)>, Box<dyn std::error::Error>> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read pairs {}: {e}", path.display()))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ids: Vec<u64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?;
        let [s, t] = ids[..] else {
            return Err(format!("{}:{}: expected two vertex ids", path.display(), i + 1).into());
        };
        pairs.push((vertex(g, s)?, vertex(g, t)?));
    }
    Ok(pairs)
}

fn bench(a: &BenchArgs) -> Outcome {
    let g = load_graph(&a.graph)?;
    let pairs = read_pairs(&g, &a.pairs)?;
    let algorithms = a.algos.iter().map(|s| Algorithm::parse(s)).collect::<Result<Vec<_>, _>>()?;
    let cfg = SweepConfig {
        pairs,
        eps_list: a.eps_list.clone(),
        seeds: a.seeds.clone(),
        algorithms,
        truncation: a.steps.truncation(),
        exact: !a.no_exact,
        workers: a.workers.max(1),
    };
    let graph_id = a.graph.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut records = bench_sweep(&g, &graph_id, &cfg)?;
    for r in &mut records {
        r.s = r.s.map(|v| g.external_id(v) as usize);
        r.t = r.t.map(|v| g.external_id(v) as usize);
    }
    eprintln!("{} rows", records.len());
    write_csv(&records, io::stdout().lock())?;
    Ok(())
}

fn spectral(a: &SpectralArgs) -> Outcome {
    let g = load_graph(&a.graph)?;
    let stats = estimate_spectral(&g, a.tol, a.max_iter)?;
    print_json(&stats)
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Exact(a) => exact(a),
        Command::Estimate(a) => estimate(a, false),
        Command::Baseline(a) => estimate(a, true),
        Command::BuildIndex(a) => build(a),
        Command::Query(a) => query(a),
        Command::GenLowerbound(a) => gen_lowerbound(a),
        Command::Bench(a) => bench(a),
        Command::Spectral(a) => spectral(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
