//! The `tubebbm` command line.
//!
//! Exit codes: 0 ok, 2 configuration or usage error, 3 numerical error,
//! 4 a verification or acceptance check failed. Errors are reported on
//! standard error as one JSON object.

pub mod output;
pub mod scenario;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::acceptance::{run_acceptance, AcceptConfig, Budget};
use crate::error::{Error, Result};
use crate::path::specfile::resolve_spec;
use crate::path::PathSpec;
use crate::rates::{geometric_grid, linear_grid, RateCurve};
use crate::sim::{default_record_grid, run_trees, SimParams};
use crate::spine::{simulate_q_tree, simulate_spine, spine_decomposition_rhs, Redrawer};
use crate::stats::mean_se;
use output::Sink;
use scenario::{run_scenario, Scenario};
use verify::{run_suite, Suite, VerifyParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_FAIL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "tubebbm", version, about = "Branching Brownian motion in tubes around paths")]
pub struct Cli {
    /// Base seed; every stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write outputs as files here instead of to standard output.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate integral, error budget and running infimum on a grid (CSV).
    Rates(RatesArgs),
    /// Forward simulations under P (JSON lines, one per replicate).
    Simulate(SimulateArgs),
    /// Spine runs under Q (CSV, one row per replicate and time).
    Spine(SpineArgs),
    /// One statistical check suite (PASS/FAIL table and JSON-line verdicts).
    Verify(VerifyArgs),
    /// The acceptance suite.
    Accept(AcceptArgs),
    /// Every analysis of a scenario file.
    Run(RunArgs),
}

/// Grid of `n` points, equally spaced or geometric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Linear(usize),
    Geometric(usize),
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let bad = || format!("expected <n> or geometric:<n>, got {s:?}");
    match s.strip_prefix("geometric:") {
        Some(n) => n.parse().map(GridSpec::Geometric).map_err(|_| bad()),
        None => s.parse().map(GridSpec::Linear).map_err(|_| bad()),
    }
}

fn parse_budget(s: &str) -> std::result::Result<Budget, String> {
    s.parse::<Budget>().map_err(|e| e.to_string())
}

/// `n` → the default geometric record grid with `n` points; otherwise a
/// comma-separated list of times.
fn parse_record_grid(s: &str) -> std::result::Result<RecordGrid, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(RecordGrid::Count(n));
    }
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad record time {x:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(RecordGrid::Times)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordGrid {
    Count(usize),
    Times(Vec<f64>),
}

impl RecordGrid {
    fn times(&self, horizon: f64, dt: f64) -> Vec<f64> {
        match self {
            RecordGrid::Count(n) => default_record_grid(horizon, dt, *n),
            RecordGrid::Times(t) => t.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    /// `builtin:<family>[:k=v,...]` or a spec file.
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub r: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t_max: f64,
    /// Smallest positive time of a geometric grid (default `t_max`/1000).
    #[arg(long)]
    pub t_min: Option<f64>,
    /// `<n>` equally spaced points or `geometric:<n>`.
    #[arg(long, default_value = "256", value_parser = parse_grid)]
    pub grid: GridSpec,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub r: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
    /// `<n>` geometric points or a comma-separated list of times.
    #[arg(long, value_parser = parse_record_grid)]
    pub record_grid: Option<RecordGrid>,
}

impl SimArgs {
    fn params(&self, seed: u64) -> SimParams {
        let mut p = SimParams::new(self.r, self.dt, self.horizon)
            .with_seed(seed)
            .with_replicates(self.replicates);
        if let Some(g) = &self.record_grid {
            p = p.with_record_grid(g.times(self.horizon, self.dt));
        }
        p
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    /// Spine position at every grid node.
    Path,
    /// `ζ` and `e^{−rt}ζ` of the spine at the record times.
    Zeta,
    /// `Z` of the whole Q-tree at the record times.
    #[value(name = "Z")]
    Z,
    /// Decomposition right-hand side against the mean of fresh subtree draws.
    Decomp,
}

#[derive(Debug, Args)]
pub struct SpineArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum)]
    pub emit: Emit,
    /// Subtree redraws per spine for `--emit decomp`.
    #[arg(long, default_value_t = 200)]
    pub redraws: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub r: f64,
    /// Replicates per estimate.
    #[arg(long, default_value_t = 1000)]
    pub budget: u64,
    #[arg(long, default_value_t = 2.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct AcceptArgs {
    /// `smoke` or `full`.
    #[arg(value_parser = parse_budget)]
    pub budget: Budget,
    /// Run only these criteria (e.g. `--only A5 --only A9`).
    #[arg(long)]
    pub only: Vec<String>,
    /// Multiplies every simulation time step.
    #[arg(long, default_value_t = 1.0)]
    pub dt_scale: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub scenario: PathBuf,
}

pub(crate) fn grid_points(g: GridSpec, t_min: Option<f64>, t_max: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0) {
        return Err(Error::Config(format!("t_max must be positive, got {t_max}")));
    }
    match g {
        GridSpec::Linear(n) if n >= 1 => Ok(linear_grid(t_max, n)),
        GridSpec::Geometric(n) if n >= 2 => {
            let lo = t_min.unwrap_or(t_max * 1e-3);
            if !(lo > 0.0 && lo < t_max) {
                return Err(Error::Config(format!("t_min must lie in (0, t_max), got {lo}")));
            }
            Ok(geometric_grid(lo, t_max, n))
        }
        _ => Err(Error::Config("grid needs at least one (linear) or two (geometric) points".into())),
    }
}

pub(crate) fn write_rates(sink: &mut Sink, curve: &RateCurve) -> Result<()> {
    sink.line("t,R,E,runinf,R_over_t")?;
    for i in 0..curve.len() {
        sink.csv_row(&[], &[curve.grid[i], curve.rate[i], curve.budget[i], curve.runinf[i], curve.ratio(i)])?;
    }
    Ok(())
}

fn error_kind(e: &Error) -> &'static str {
    match e.exit_code() {
        EXIT_CONFIG => "config-error",
        _ => "numeric-error",
    }
}

fn report_error(e: &Error) -> i32 {
    let v = serde_json::json!({
        "error": error_kind(e),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    });
    eprintln!("{v}");
    e.exit_code()
}

fn cmd_rates(a: &RatesArgs, out_dir: Option<&Path>) -> Result<i32> {
    let spec = resolve_spec(&a.spec)?;
    let grid = grid_points(a.grid, a.t_min, a.t_max)?;
    let curve = RateCurve::build(&spec, a.r, &grid, a.tol)?;
    let mut sink = Sink::open(out_dir, "rates.csv")?;
    write_rates(&mut sink, &curve)?;
    sink.finish()?;
    Ok(EXIT_OK)
}

#[derive(serde::Serialize)]
struct TreeSummary<'a> {
    replicate: u64,
    extinction_time: Option<f64>,
    capped: bool,
    counts: &'a [(f64, u64)],
}

fn cmd_simulate(a: &SimulateArgs, seed: u64, out_dir: Option<&Path>) -> Result<i32> {
    let spec = resolve_spec(&a.sim.spec)?;
    let p = a.sim.params(seed).with_cap(a.cap);
    let runs = run_trees(&spec, &p)?;
    let mut sink = Sink::open(out_dir, "simulate.jsonl")?;
    for r in &runs {
        sink.json(&TreeSummary {
            replicate: r.replicate,
            extinction_time: r.extinction_time,
            capped: r.capped,
            counts: &r.counts,
        })?;
    }
    sink.finish()?;
    Ok(EXIT_OK)
}

fn spine_rows(spec: &PathSpec, p: &SimParams, emit: Emit, redraws: u64, i: u64) -> Result<Vec<Vec<f64>>> {
    Ok(match emit {
        Emit::Path => simulate_spine(spec, p, i, true)?.path.iter().map(|n| vec![n.t, n.y]).collect(),
        Emit::Zeta => {
            let run = simulate_spine(spec, p, i, false)?;
            run.zeta_series.iter().zip(&run.spine_weight).map(|(&(t, z), &w)| vec![t, z, w]).collect()
        }
        Emit::Z => simulate_q_tree(spec, p, i, false)?
            .z_series
            .expect("q-tree runs carry Z")
            .into_iter()
            .map(|(t, z)| vec![t, z])
            .collect(),
        Emit::Decomp => {
            let run = simulate_spine(spec, p, i, true)?;
            let rhs = spine_decomposition_rhs(&run)?;
            let rd = Redrawer::new(spec, p)?;
            let draws = (0..redraws).map(|j| rd.draw(&run, j)).collect::<Result<Vec<_>>>()?;
            rhs.iter()
                .enumerate()
                .map(|(k, &(t, v))| {
                    let col: Vec<f64> = draws.iter().map(|d| d[k]).collect();
                    let (m, se) = mean_se(&col);
                    vec![t, v, m, se]
                })
                .collect()
        }
    })
}

fn cmd_spine(a: &SpineArgs, seed: u64, out_dir: Option<&Path>) -> Result<i32> {
    if a.emit == Emit::Decomp && a.redraws < 2 {
        return Err(Error::Config("--emit decomp needs at least two redraws".into()));
    }
    let spec = resolve_spec(&a.sim.spec)?;
    let p = a.sim.params(seed);
    let (name, header) = match a.emit {
        Emit::Path => ("spine_path.csv", "replicate,t,y"),
        Emit::Zeta => ("spine_zeta.csv", "replicate,t,zeta,spine_weight"),
        Emit::Z => ("spine_Z.csv", "replicate,t,Z"),
        Emit::Decomp => ("spine_decomp.csv", "replicate,t,rhs,z_mean,z_se"),
    };
    let rows: Vec<Vec<Vec<f64>>> = (0..p.replicates)
        .into_par_iter()
        .map(|i| spine_rows(&spec, &p, a.emit, a.redraws, i))
        .collect::<Result<_>>()?;
    let mut sink = Sink::open(out_dir, name)?;
    sink.line(header)?;
    for (i, rows) in rows.iter().enumerate() {
        for row in rows {
            sink.csv_row(&[i as u64], row)?;
        }
    }
    sink.finish()?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs, seed: u64, out_dir: Option<&Path>) -> Result<i32> {
    let spec = resolve_spec(&a.spec)?;
    let v = VerifyParams {
        r: a.r,
        seed,
        replicates: a.budget,
        horizon: a.horizon,
        dt: a.dt,
        cap: a.cap,
    };
    let verdicts = run_suite(a.suite, &spec, &v)?;
    for (k, v) in verdicts.iter().enumerate() {
        println!("{} {}[{k}] {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.suite.name(), v.check, v.detail);
    }
    if out_dir.is_none() {
        println!();
    }
    let mut sink = Sink::open(out_dir, "verdicts.jsonl")?;
    for v in &verdicts {
        sink.json(v)?;
    }
    sink.finish()?;
    Ok(if verdicts.iter().all(|v| v.pass) { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_accept(a: &AcceptArgs, seed: Option<u64>, out_dir: Option<&Path>) -> Result<i32> {
    let mut cfg = AcceptConfig::new(a.budget);
    cfg.dt_scale = a.dt_scale;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let results = run_acceptance(&cfg, &a.only, |r| {
        println!("{} {:<4} {} ({:.1}s)", if r.pass { "PASS" } else { "FAIL" }, r.id, r.summary, r.seconds);
    });
    if results.is_empty() {
        return Err(Error::Config(format!("no criteria match {:?}", a.only)));
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if let Some(dir) = out_dir {
        let mut sink = Sink::open(Some(dir), "acceptance.jsonl")?;
        for r in &results {
            sink.json(r)?;
        }
        sink.finish()?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_run(a: &RunArgs, seed: Option<u64>, out_dir: Option<&Path>) -> Result<i32> {
    let mut s = Scenario::load(&a.scenario)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(dir) = out_dir {
        s.output.dir = dir.to_path_buf();
    }
    let base = a.scenario.parent().unwrap_or(Path::new("."));
    let m = run_scenario(&s, base)?;
    for f in &m.files {
        println!("{}  {}", f.sha256, s.output.dir.join(&f.path).display());
    }
    println!("verdicts: {} passed, {} failed", m.passed, m.failed);
    Ok(if m.all_pass() { EXIT_OK } else { EXIT_FAIL })
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let out = cli.out_dir.as_deref();
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Rates(a) => cmd_rates(a, out),
        Command::Simulate(a) => cmd_simulate(a, seed, out),
        Command::Spine(a) => cmd_spine(a, seed, out),
        Command::Verify(a) => cmd_verify(a, seed, out),
        Command::Accept(a) => cmd_accept(a, cli.seed, out),
        Command::Run(a) => cmd_run(a, cli.seed, out),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let go = || dispatch(&cli).unwrap_or_else(|e| report_error(&e));
    match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(go),
            Err(e) => report_error(&Error::Config(format!("thread pool: {e}"))),
        },
        None => go(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flags() {
        assert_eq!(parse_grid("12"), Ok(GridSpec::Linear(12)));
        assert_eq!(parse_grid("geometric:40"), Ok(GridSpec::Geometric(40)));
        assert!(parse_grid("geo:40").is_err());
        let g = grid_points(GridSpec::Geometric(3), Some(1.0), 100.0).unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12 && g[2] == 100.0);
        assert!(grid_points(GridSpec::Linear(0), None, 1.0).is_err());
    }

    #[test]
    fn record_grid_flag() {
        assert_eq!(parse_record_grid("5"), Ok(RecordGrid::Count(5)));
        assert_eq!(parse_record_grid("0, 0.5,1"), Ok(RecordGrid::Times(vec![0.0, 0.5, 1.0])));
        assert!(parse_record_grid("0,x").is_err());
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["tubebbm", "accept", "smoek"]), EXIT_CONFIG);
        assert_eq!(run(["tubebbm", "rates", "--spec", "builtin:linear_const"]), EXIT_CONFIG);
        assert_eq!(run(["tubebbm", "rates", "--spec", "builtin:nope", "--r", "1"]), EXIT_CONFIG);
    }
}
