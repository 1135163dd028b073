//! Command-line front end.
//!
//! Environment overrides: `NBRW_OUT_DIR` sets the default output directory
//! for `simulate`, and `NBRW_THREADS` caps the worker threads used for
//! multi-seed batches.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, GraphSpec};
use crate::csv::{fmt_f64, parse_tail_csv};
use crate::engine::{self, InitialCondition, RNG_NAME};
use crate::error::{Error, Result};
use crate::fluid::{self, FluidState};
use crate::graph::{self, Graph};
use crate::walker::{self, MixingOptions};

pub const OUT_DIR_ENV: &str = "NBRW_OUT_DIR";
pub const THREADS_ENV: &str = "NBRW_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nbrw", version, about = "Non-backtracking power-of-d load balancing toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or validate interconnection graphs.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Simulate a configured experiment for one or more seeds.
    Simulate(SimulateArgs),
    /// Estimate stationary tail occupancy over several seeds.
    Stationary(StationaryArgs),
    /// Integrate the mean-field ODE and compute its fixed point.
    Fluid(FluidArgs),
    /// Compare a simulated tail CSV against a fluid tail CSV.
    Compare(CompareArgs),
    /// Exact non-backtracking mixing deviation at several step counts.
    Mixing(MixingArgs),
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Build a graph and write it as an edge list.
    Generate(GenerateArgs),
    /// Print a JSON report (connectivity, bipartiteness, girth, spectral gap).
    Validate {
        path: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
#[group(id = "family", required = true, multiple = false)]
pub struct Family {
    #[arg(long, value_name = "N")]
    cycle: Option<usize>,
    #[arg(long, num_args = 1.., value_name = "DIM")]
    torus: Option<Vec<usize>>,
    #[arg(long, num_args = 2, value_names = ["P", "Q"])]
    lps: Option<Vec<u64>>,
    #[arg(long = "random-regular", num_args = 2, value_names = ["N", "K"])]
    random_regular: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    family: Family,
    /// Seed for random-regular graphs.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    config: PathBuf,
    /// Comma-separated seeds; defaults to the config's seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// RK4 step for the reference fluid path.
    #[arg(long, default_value_t = 0.01)]
    h: f64,
}

#[derive(Debug, Args)]
pub struct StationaryArgs {
    config: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4, 5])]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 50.0)]
    burn_in: f64,
    #[arg(long, default_value_t = 200.0)]
    horizon: f64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FluidArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long = "b", default_value_t = 16)]
    truncation: usize,
    #[arg(long = "t", default_value_t = 20.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Sampling interval of the output CSV.
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, default_value = "empty")]
    init: String,
    #[arg(short, long)]
    out: PathBuf,
    /// Defaults to `<out>.fixed_point.json`.
    #[arg(long)]
    fixed_point: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    sim_csv: PathBuf,
    fluid_csv: PathBuf,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MixingArgs {
    graph: PathBuf,
    #[arg(long = "t", value_delimiter = ',', required = true)]
    ts: Vec<usize>,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Enumerate every start edge when n*k is at most this.
    #[arg(long, default_value_t = 10_000)]
    exact_bound: usize,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Sizes the global rayon pool from `NBRW_THREADS`, if set.
pub fn init_thread_pool() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let threads: usize = v
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{THREADS_ENV} must be an integer, got `{v}`")))?;
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Graph(GraphCommand::Generate(args)) => cmd_graph_generate(args),
        Command::Graph(GraphCommand::Validate { path, tol }) => cmd_graph_validate(&path, tol),
        Command::Simulate(args) => cmd_simulate(args).map(|_| ()),
        Command::Stationary(args) => cmd_stationary(args),
        Command::Fluid(args) => cmd_fluid(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Mixing(args) => cmd_mixing(args),
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_graph_generate(args: GenerateArgs) -> Result<()> {
    let f = args.family;
    let g = if let Some(n) = f.cycle {
        graph::build_cycle(n)?
    } else if let Some(dims) = f.torus {
        graph::build_torus(&dims)?
    } else if let Some(pq) = f.lps {
        graph::build_lps(pq[0], pq[1])?
    } else if let Some(nk) = f.random_regular {
        graph::build_random_regular(nk[0], nk[1], args.seed)?
    } else {
        unreachable!("clap requires one graph family")
    };
    graph::write_edge_list(&g, &args.out)?;
    println!("{}", json!({ "path": args.out, "n": g.n(), "k": g.k() }));
    Ok(())
}

fn cmd_graph_validate(path: &Path, tol: f64) -> Result<()> {
    let g = graph::read_edge_list(path)?;
    let mut report = graph::validate(&g);
    if tol != graph::SpectralOptions::default().tol {
        match graph::spectral_lambda(&g, tol) {
            Ok(l) => report.spectral_lambda = l,
            Err(Error::NumericalFailure { best_estimate, .. }) => {
                report.spectral_lambda = best_estimate;
                report.spectral_converged = false;
            }
            Err(e) => return Err(e),
        }
    }
    write_json(&report, None)
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::parse(&fs::read_to_string(path)?)?;
    if let GraphSpec::File { path: gp } = &cfg.graph {
        if gp.is_relative() {
            if let Some(dir) = path.parent() {
                let joined = dir.join(gp);
                if joined.exists() {
                    cfg.graph = GraphSpec::File { path: joined };
                }
            }
        }
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
pub struct SeedOutput {
    pub seed: u64,
    pub trajectory: String,
    pub events: u64,
    pub overflow: bool,
    pub sup_l1: Option<f64>,
    pub final_l1: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: String,
    pub config_json: serde_json::Value,
    pub graph: GraphSummary,
    pub rng: String,
    pub seeds: Vec<u64>,
    pub fluid: Option<String>,
    pub outputs: Vec<SeedOutput>,
    pub sup_l1_mean: Option<f64>,
    pub sup_l1_median: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct GraphSummary {
    pub spec: String,
    pub n: usize,
    pub k: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<RunManifest> {
    let started = Instant::now();
    let cfg = load_config(&args.config)?;
    let seeds = if args.seeds.is_empty() { vec![cfg.seed] } else { args.seeds.clone() };
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        return Err(Error::InvalidParameter("seeds must be distinct".into()));
    }
    let out_dir = args.out.unwrap_or_else(default_out_dir);
    fs::create_dir_all(&out_dir)?;
    let g = cfg.graph.build()?;

    // The mean-field ODE describes every power-of-d style policy; JSQ has none.
    let reference = match cfg.policy.d() {
        Some(d) => {
            let x0 = FluidState::from_initial(&cfg.init, cfg.lambda, d, cfg.truncation)?;
            let traj = fluid::integrate(&x0, cfg.horizon, args.h)?;
            fs::write(out_dir.join("fluid.csv"), traj.to_csv(cfg.dt))?;
            Some(traj)
        }
        None => None,
    };

    let outputs = seeds
        .par_iter()
        .map(|&seed| -> Result<SeedOutput> {
            let run_cfg = ExperimentConfig { seed, ..cfg.clone() };
            let traj = engine::simulate(&run_cfg, &g)?;
            let name = format!("trajectory_seed{seed}.csv");
            fs::write(out_dir.join(&name), traj.to_csv())?;
            let report = match &reference {
                Some(f) => {
                    let rows: Vec<Vec<f64>> = traj.tails.iter().map(|t| t.x.clone()).collect();
                    Some(fluid::deviation_report(&traj.times, &rows, &f.times, &f.states)?)
                }
                None => None,
            };
            Ok(SeedOutput {
                seed,
                trajectory: name,
                events: traj.meta.events,
                overflow: traj.overflowed(),
                sup_l1: report.as_ref().map(|r| r.sup_l1),
                final_l1: report.as_ref().map(|r| r.final_l1),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let sups: Vec<f64> = outputs.iter().filter_map(|o| o.sup_l1).collect();
    let manifest = RunManifest {
        config: cfg.to_kv(),
        config_json: cfg.to_json(),
        graph: GraphSummary { spec: cfg.graph.to_string(), n: g.n(), k: g.k() },
        rng: RNG_NAME.into(),
        seeds,
        fluid: reference.as_ref().map(|_| "fluid.csv".to_string()),
        outputs,
        sup_l1_mean: (!sups.is_empty()).then(|| sups.iter().sum::<f64>() / sups.len() as f64),
        sup_l1_median: (!sups.is_empty()).then(|| median(sups.clone())),
    };
    for o in &manifest.outputs {
        if !out_dir.join(&o.trajectory).is_file() {
            return Err(Error::InternalConsistency(format!("missing output {}", o.trajectory)));
        }
    }
    write_json(&manifest, Some(&out_dir.join("manifest.json")))?;
    write_json(
        &json!({ "wall_clock_seconds": started.elapsed().as_secs_f64() }),
        Some(&out_dir.join("timing.json")),
    )?;
    Ok(manifest)
}

fn cmd_stationary(args: StationaryArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let g = cfg.graph.build()?;
    let summary = engine::stationary_over_seeds(&cfg, &g, &args.seeds, args.burn_in, args.horizon)?;
    let report = json!({
        "lambda": cfg.lambda,
        "d": cfg.policy.d(),
        "policy": cfg.policy.name(),
        "graph": cfg.graph.to_string(),
        "burn_in": args.burn_in,
        "horizon": args.horizon,
        "seeds": summary.seeds,
        "estimate": summary.estimate,
        "stderr": summary.stderr,
        "mean_queue": summary.mean_queue,
        "mean_queue_stderr": summary.mean_queue_stderr,
    });
    write_json(&report, args.out.as_deref())
}

fn cmd_fluid(args: FluidArgs) -> Result<()> {
    if !(args.lambda > 0.0 && args.lambda < 1.0) {
        return Err(Error::InvalidParameter(format!("lambda must lie in (0, 1), got {}", args.lambda)));
    }
    if !(args.dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let init = InitialCondition::parse(&args.init)?;
    let x0 = FluidState::from_initial(&init, args.lambda, args.d, args.truncation)?;
    let traj = fluid::integrate(&x0, args.horizon, args.h)?;
    fs::write(&args.out, traj.to_csv(args.dt))?;
    let fp = fluid::fixed_point(args.lambda, args.d, args.truncation)?;
    let residual = fluid::fixed_point_residual(args.lambda, args.d, args.truncation)?;
    let fp_path = args.fixed_point.unwrap_or_else(|| args.out.with_extension("fixed_point.json"));
    let fixed: Vec<String> = fp.x.iter().map(|&v| fmt_f64(v)).collect();
    write_json(
        &json!({
            "lambda": args.lambda,
            "d": args.d,
            "B": args.truncation,
            "fixed_point": fp.x,
            "fixed_point_exact": fixed,
            "residual": residual,
        }),
        Some(&fp_path),
    )
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let sim = parse_tail_csv(&fs::read_to_string(&args.sim_csv)?)?;
    let reference = parse_tail_csv(&fs::read_to_string(&args.fluid_csv)?)?;
    let report = fluid::compare_series(&sim, &reference)?;
    write_json(&report, args.out.as_deref())
}

fn cmd_mixing(args: MixingArgs) -> Result<()> {
    let g: Graph = graph::read_edge_list(&args.graph)?;
    if g.k() == 2 {
        eprintln!(
            "warning: k = 2 makes the non-backtracking walk deterministic; expect deviation near 1 - 1/n"
        );
    }
    let opts = MixingOptions {
        exact_bound: args.exact_bound,
        sample_size: args.samples,
        sample_seed: args.seed,
        start_edges: None,
    };
    let report = walker::mixing_profile(&g, &args.ts, &opts)?;
    if !report.exact {
        eprintln!(
            "note: {} sampled start edges; deviations are lower bounds on the maximum",
            report.start_edges
        );
    }
    let mut text = String::from("t,deviation\n");
    for p in &report.points {
        text.push_str(&format!("{},{}\n", p.t, fmt_f64(p.deviation)));
    }
    match args.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
