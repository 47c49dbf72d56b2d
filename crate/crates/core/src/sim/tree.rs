use rayon::prelude::*;

use super::engine::{excess, log_weight_shift, step_population, BirthRecord, Frame, Grid, Particle, StepConfig};
use super::{GineqStats, SimParams, TreeRun};
use crate::error::{Error, Result};
use crate::path::{eval_path, PathSpec};
use crate::rates::RateCurve;
use crate::rng::{replicate_key, Purpose};
use crate::stats::{Diagnostics, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observe {
    Counts,
    /// Also assemble `Z(t)`; `gineq` adds the envelope check on every particle.
    Weights { gineq: bool },
}

/// Everything about a simulation that is shared by all replicates.
#[derive(Debug, Clone)]
pub struct ForestCtx<'a> {
    pub spec: &'a PathSpec,
    pub cfg: StepConfig,
    pub grid: Grid,
    pub record_nodes: Vec<usize>,
    pub record_times: Vec<f64>,
    pub observe: Observe,
    pub purpose: Purpose,
    pub seed: u64,
    pub x0: f64,
    pub birth_log: bool,
    rates: Vec<f64>,
    budgets: Vec<f64>,
    y0: f64,
    df0: f64,
}

impl<'a> ForestCtx<'a> {
    pub fn new(spec: &'a PathSpec, p: &SimParams) -> Result<Self> {
        p.validate()?;
        let grid = Grid::new(p.horizon, p.dt);
        let mut record_nodes: Vec<usize> = p.record_times().iter().map(|&t| grid.node(t)).collect();
        record_nodes.dedup();
        let record_times: Vec<f64> = record_nodes.iter().map(|&k| grid.time(k)).collect();
        let origin = eval_path(spec, 0.0)?;
        let observe = if p.track_weights {
            Observe::Weights { gineq: true }
        } else {
            Observe::Counts
        };
        let mut ctx = ForestCtx {
            spec,
            cfg: StepConfig {
                r: p.r,
                cap: p.cap,
                bridge: p.bridge,
            },
            grid,
            record_nodes,
            record_times,
            observe,
            purpose: Purpose::Tree,
            seed: p.seed,
            x0: p.x0,
            birth_log: p.birth_log,
            rates: Vec::new(),
            budgets: Vec::new(),
            y0: p.x0 - origin.f,
            df0: origin.df,
        };
        if p.track_weights {
            ctx.prepare_weights()?;
        }
        Ok(ctx)
    }

    fn prepare_weights(&mut self) -> Result<()> {
        let curve = RateCurve::build(self.spec, self.cfg.r, &self.record_times, 1e-9)?;
        self.rates = curve.rate;
        self.budgets = curve.budget;
        Ok(())
    }

    pub fn with_purpose(mut self, purpose: Purpose) -> Self {
        self.purpose = purpose;
        self
    }

    pub fn with_observe(mut self, observe: Observe) -> Result<Self> {
        let need = matches!(observe, Observe::Weights { .. }) && self.rates.is_empty();
        self.observe = observe;
        if need {
            self.prepare_weights()?;
        }
        Ok(self)
    }

    /// `R(t)` at each record time (available when weights are observed).
    pub fn record_rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn root_key(&self, replicate: u64) -> u64 {
        replicate_key(self.seed, self.purpose, replicate)
    }
}

/// Per-record-time observations of one forest.
#[derive(Debug, Clone, Default)]
pub struct ForestResult {
    pub counts: Vec<u64>,
    pub z: Vec<f64>,
    pub gineq: GineqStats,
    pub extinction_time: Option<f64>,
    pub capped_at: Option<f64>,
    pub survivors: u64,
    pub births: Option<Vec<BirthRecord>>,
}

/// Runs a population from `start_t` to the horizon. Record times before
/// `start_t` see an empty population.
pub fn run_forest(ctx: &ForestCtx<'_>, start_t: f64, mut pop: Vec<Particle>) -> ForestResult {
    let nrec = ctx.record_nodes.len();
    let weights = matches!(ctx.observe, Observe::Weights { .. });
    let gineq_on = matches!(ctx.observe, Observe::Weights { gineq: true }) && start_t == 0.0;
    let mut out = ForestResult {
        counts: vec![0; nrec],
        z: if weights { vec![0.0; nrec] } else { Vec::new() },
        births: if ctx.birth_log { Some(Vec::new()) } else { None },
        ..ForestResult::default()
    };
    let spec = ctx.spec;
    let eps = 1e-12 * start_t.max(1.0);
    let mut a = Frame::at(spec, start_t);
    pop.retain(|q| (q.x - a.p.f).abs() < a.p.l);
    let (mut env_f, mut env_l) = (0.0, 0.0);

    let record = |i: usize, pop: &[Particle], fr: &Frame, env_f: f64, env_l: f64, out: &mut ForestResult| {
        out.counts[i] = pop.len() as u64;
        if !weights {
            return;
        }
        let r_t = ctx.rates[i];
        let mut z = 0.0;
        for q in pop {
            z += (log_weight_shift(q, fr, ctx.y0, ctx.df0) - r_t).exp();
        }
        out.z[i] = z;
        if gineq_on {
            let start = (ctx.df0 * ctx.y0).abs();
            let tip = fr.p.df.abs() * fr.p.l + 0.5 * fr.p.dl.abs() * fr.p.l;
            let e_grid = start + tip + env_f + 0.5 * env_l;
            let e_quad = start + ctx.budgets[i];
            let g = &mut out.gineq;
            for q in pop {
                let ex = excess(q, fr, ctx.y0, ctx.df0).abs();
                g.checks += 1;
                if ex > e_grid * (1.0 + 1e-12) + 1e-12 {
                    g.violations_grid += 1;
                }
                if ex > e_quad * (1.0 + 1e-9) + 1e-9 {
                    g.violations_quad += 1;
                }
                let ratio = if e_grid > 0.0 { ex / e_grid } else if ex == 0.0 { 0.0 } else { f64::INFINITY };
                g.max_ratio = g.max_ratio.max(ratio);
            }
            if i == nrec - 1 {
                g.paths = pop.len() as u64;
            }
        }
    };

    let mut rec = 0;
    while rec < nrec && ctx.record_times[rec] <= start_t + eps {
        if (ctx.record_times[rec] - start_t).abs() <= eps {
            record(rec, &pop, &a, env_f, env_l, &mut out);
        }
        rec += 1;
    }
    if pop.is_empty() {
        out.extinction_time = Some(start_t);
        return out;
    }
    let mut scratch = Vec::with_capacity(pop.len());
    if ctx.grid.steps > 0 {
        for k in ctx.grid.next_node(start_t)..=ctx.grid.steps {
            let b = Frame::at(spec, ctx.grid.time(k));
            if b.t <= a.t {
                continue;
            }
            let rep = step_population(&mut pop, &mut scratch, &a, &b, &ctx.cfg, out.births.as_mut());
            if rep.suppressed > 0 && out.capped_at.is_none() {
                out.capped_at = Some(b.t);
            }
            let h = b.t - a.t;
            env_f += 0.5 * h * (a.p.ddf.abs() * a.p.l + b.p.ddf.abs() * b.p.l);
            env_l += 0.5 * h * (a.p.ddl.abs() * a.p.l + b.p.ddl.abs() * b.p.l);
            while rec < nrec && ctx.record_nodes[rec] == k {
                record(rec, &pop, &b, env_f, env_l, &mut out);
                rec += 1;
            }
            if pop.is_empty() {
                out.extinction_time = Some(b.t);
                break;
            }
            a = b;
        }
    }
    out.survivors = pop.len() as u64;
    out
}

fn run_replicate(ctx: &ForestCtx<'_>, replicate: u64) -> TreeRun {
    let root = Particle::seed(ctx.root_key(replicate), 0.0, ctx.x0, ctx.cfg.r);
    let res = run_forest(ctx, 0.0, vec![root]);
    let weights = matches!(ctx.observe, Observe::Weights { .. });
    let gineq = matches!(ctx.observe, Observe::Weights { gineq: true });
    TreeRun {
        replicate,
        extinction_time: res.extinction_time,
        capped: res.capped_at.is_some(),
        capped_at: res.capped_at,
        counts: ctx.record_times.iter().copied().zip(res.counts.iter().copied()).collect(),
        survivors_at_horizon: res.survivors,
        z_series: weights.then(|| ctx.record_times.iter().copied().zip(res.z.iter().copied()).collect()),
        gineq: gineq.then_some(res.gineq),
        birth_log: res.births,
    }
}

/// Replicate `replicate` of a forward simulation.
pub fn simulate_tree_replicate(spec: &PathSpec, p: &SimParams, replicate: u64) -> Result<TreeRun> {
    let ctx = ForestCtx::new(spec, p)?;
    Ok(run_replicate(&ctx, replicate))
}

/// Replicate 0 of a forward simulation.
pub fn simulate_tree(spec: &PathSpec, p: &SimParams) -> Result<TreeRun> {
    simulate_tree_replicate(spec, p, 0)
}

/// All `p.replicates` runs, in replicate order.
pub fn run_trees(spec: &PathSpec, p: &SimParams) -> Result<Vec<TreeRun>> {
    let ctx = ForestCtx::new(spec, p)?;
    Ok(run_trees_ctx(&ctx, p.replicates))
}

pub(crate) fn run_trees_ctx(ctx: &ForestCtx<'_>, n: u64) -> Vec<TreeRun> {
    (0..n).into_par_iter().map(|i| run_replicate(ctx, i)).collect()
}

fn survival_params(p: &SimParams, t: f64) -> Result<SimParams> {
    if !(t >= 0.0) || t > p.horizon * (1.0 + 1e-12) {
        return Err(Error::Input(format!("survival time {t} must lie in [0, horizon={}]", p.horizon)));
    }
    let mut q = p.clone();
    q.horizon = t;
    q.record_grid = vec![t];
    q.track_weights = false;
    q.birth_log = false;
    Ok(q)
}

fn survival_estimate(runs: &[TreeRun]) -> Estimate {
    let n = runs.len() as u64;
    let hits = runs.iter().filter(|r| r.survived()).count() as u64;
    let mut e = Estimate::proportion(hits, n);
    e.diagnostics.cap_excluded = runs.iter().filter(|r| r.capped).count() as u64;
    e
}

/// Fraction of replicates with `N̂(t) ≠ ∅`.
pub fn survival_direct(spec: &PathSpec, p: &SimParams, t: f64) -> Result<Estimate> {
    if p.replicates == 0 {
        return Err(Error::Input("survival_direct needs at least one replicate".into()));
    }
    let q = survival_params(p, t)?;
    Ok(survival_estimate(&run_trees(spec, &q)?))
}

/// Survival of a single non-branching Brownian path to time `t`.
pub fn single_path_survival(spec: &PathSpec, p: &SimParams, t: f64) -> Result<Estimate> {
    let mut q = survival_params(p, t)?;
    q.r = 0.0;
    let ctx = ForestCtx::new(spec, &q)?.with_purpose(Purpose::Single);
    let mut e = survival_estimate(&run_trees_ctx(&ctx, q.replicates));
    e.diagnostics = Diagnostics {
        zero_hits: e.diagnostics.zero_hits,
        ..Diagnostics::default()
    };
    Ok(e)
}

/// Count series of the replicates alive at the horizon and never capped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowthRuns {
    pub runs: Vec<(u64, Vec<(f64, u64)>)>,
    pub cap_excluded: u64,
    pub extinct: u64,
    pub total: u64,
}

pub fn growth_trajectories(spec: &PathSpec, p: &SimParams) -> Result<GrowthRuns> {
    let runs = run_trees(spec, p)?;
    Ok(collect_growth(runs))
}

pub(crate) fn collect_growth(runs: Vec<TreeRun>) -> GrowthRuns {
    let mut g = GrowthRuns {
        total: runs.len() as u64,
        ..GrowthRuns::default()
    };
    for r in runs {
        if !r.survived() {
            g.extinct += 1;
        } else if r.capped {
            g.cap_excluded += 1;
        } else {
            g.runs.push((r.replicate, r.counts));
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::builtin;

    fn lc(lambda: f64, l: f64) -> PathSpec {
        builtin("linear_const", &[("lambda", lambda), ("L", l)]).unwrap()
    }

    #[test]
    fn zero_horizon() {
        let s = lc(0.0, 1.0);
        let run = simulate_tree(&s, &SimParams::new(1.0, 1e-3, 0.0)).unwrap();
        assert_eq!(run.counts, vec![(0.0, 1)]);
        assert_eq!(run.extinction_time, None);
        assert_eq!(run.survivors_at_horizon, 1);
    }

    #[test]
    fn reproducible() {
        let s = lc(0.5, 1.0);
        let p = SimParams::new(1.0, 1e-3, 2.0).with_seed(9).with_weights(true);
        let a = simulate_tree_replicate(&s, &p, 3).unwrap();
        let b = simulate_tree_replicate(&s, &p, 3).unwrap();
        assert_eq!(a, b);
        let c = simulate_tree_replicate(&s, &p, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn counts_zero_after_extinction() {
        let s = lc(0.0, 0.3);
        let p = SimParams::new(0.5, 1e-3, 3.0).with_replicates(50);
        for run in run_trees(&s, &p).unwrap() {
            if let Some(te) = run.extinction_time {
                assert_eq!(run.survivors_at_horizon, 0);
                let mut seen_zero = false;
                for &(t, n) in &run.counts {
                    if n == 0 {
                        seen_zero = true;
                        assert!(te <= t + 1e-12);
                    }
                    assert!(!(seen_zero && n > 0));
                }
            } else {
                assert!(run.survivors_at_horizon > 0);
            }
        }
    }

    #[test]
    fn survival_at_zero_is_one() {
        let s = lc(0.0, 1.0);
        let p = SimParams::new(0.2, 1e-3, 1.0).with_replicates(10);
        let e = survival_direct(&s, &p, 0.0).unwrap();
        assert_eq!(e.value, 1.0);
        assert!(survival_direct(&s, &p, 2.0).is_err());
    }

    #[test]
    fn z_starts_at_one() {
        let s = lc(0.7, 1.5);
        let p = SimParams::new(1.0, 1e-3, 1.0).with_weights(true).with_record_grid(vec![0.0, 1.0]);
        let run = simulate_tree(&s, &p).unwrap();
        let z = run.z_series.unwrap();
        assert!((z[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn growth_filters() {
        let runs = vec![
            TreeRun {
                replicate: 0,
                extinction_time: Some(1.0),
                capped: false,
                capped_at: None,
                counts: vec![(0.0, 1), (2.0, 0)],
                survivors_at_horizon: 0,
                z_series: None,
                gineq: None,
                birth_log: None,
            },
            TreeRun {
                replicate: 1,
                extinction_time: None,
                capped: true,
                capped_at: Some(1.5),
                counts: vec![(0.0, 1), (2.0, 10)],
                survivors_at_horizon: 10,
                z_series: None,
                gineq: None,
                birth_log: None,
            },
        ];
        let g = collect_growth(runs);
        assert!(g.runs.is_empty());
        assert_eq!((g.extinct, g.cap_excluded, g.total), (1, 1, 2));
    }
}
