use serde::{Deserialize, Serialize};

use super::{walk_spine, SpineNode, SpineRun};
use crate::error::{Error, Result};
use crate::path::PathSpec;
use crate::rates::{linear_grid, RateCurve};
use crate::rng::{derive, CounterRng, Purpose};
use crate::sim::engine::exp_draw;
use crate::sim::{run_forest, ForestCtx, Observe, Particle, SimParams};

/// Outcome of one subtree grown from a spine birth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtreeSummary {
    pub birth_time: f64,
    pub position: f64,
    pub survivors: u64,
    pub extinction_time: Option<f64>,
    pub capped_at: Option<f64>,
}

fn subtree_ctx<'a>(spec: &'a PathSpec, p: &SimParams, purpose: Purpose) -> Result<ForestCtx<'a>> {
    let mut q = p.clone();
    q.track_weights = false;
    q.birth_log = false;
    ForestCtx::new(spec, &q)?
        .with_purpose(purpose)
        .with_observe(Observe::Weights { gineq: false })
}

fn grow(ctx: &ForestCtx<'_>, key: u64, node: &SpineNode, z: &mut [f64]) -> SubtreeSummary {
    let mut root = Particle::seed(key, node.t, node.y, ctx.cfg.r);
    root.acc_f = node.acc_f;
    root.acc_l = node.acc_l;
    let res = run_forest(ctx, node.t, vec![root]);
    for (a, b) in z.iter_mut().zip(&res.z) {
        *a += b;
    }
    SubtreeSummary {
        birth_time: node.t,
        position: node.y,
        survivors: res.survivors,
        extinction_time: res.extinction_time,
        capped_at: res.capped_at,
    }
}

/// One tree under `Q`: the spine plus a killed, `P`-distributed subtree from
/// every spine birth. `z_series` holds `Z(t)` of the whole tree.
pub fn simulate_q_tree(spec: &PathSpec, p: &SimParams, replicate: u64, keep_path: bool) -> Result<SpineRun> {
    let mut run = walk_spine(spec, p, replicate, keep_path)?;
    let ctx = subtree_ctx(spec, p, Purpose::Subtree)?;
    debug_assert_eq!(ctx.record_times, run.record_times);
    let base = ctx.root_key(replicate);
    let mut z = run.spine_weight.clone();
    let subtrees = run
        .births
        .iter()
        .enumerate()
        .map(|(i, b)| grow(&ctx, derive(base, i as u64), b, &mut z))
        .collect();
    run.z_series = Some(run.record_times.iter().copied().zip(z).collect());
    run.subtrees = Some(subtrees);
    Ok(run)
}

/// Fresh draws of births and subtrees along a fixed spatial spine path.
///
/// Birth positions between grid nodes are linearly interpolated.
pub struct Redrawer<'a> {
    ctx: ForestCtx<'a>,
    rate: f64,
    horizon: f64,
}

impl<'a> Redrawer<'a> {
    pub fn new(spec: &'a PathSpec, p: &SimParams) -> Result<Self> {
        Ok(Redrawer {
            ctx: subtree_ctx(spec, p, Purpose::Redraw)?,
            rate: 2.0 * p.r,
            horizon: p.horizon,
        })
    }

    /// `Z(t)` at the record times for redraw number `redraw` of `run`, which
    /// must have been simulated with its path kept.
    pub fn draw(&self, run: &SpineRun, redraw: u64) -> Result<Vec<f64>> {
        if run.path.is_empty() {
            return Err(Error::Input("redraws need a spine run with its path kept".into()));
        }
        if run.record_times != self.ctx.record_times {
            return Err(Error::Input("spine run and redraw parameters use different record grids".into()));
        }
        let base = derive(self.ctx.root_key(run.replicate), redraw);
        let mut clock = CounterRng::new(derive(base, u64::MAX));
        let mut z = run.spine_weight.clone();
        let mut t = exp_draw(&mut clock, self.rate);
        let mut i = 0u64;
        while t < self.horizon {
            let node = run
                .interpolate(t)
                .ok_or_else(|| Error::Input(format!("spine path does not cover t={t}")))?;
            grow(&self.ctx, derive(base, i), &node, &mut z);
            i += 1;
            t += exp_draw(&mut clock, self.rate);
        }
        Ok(z)
    }
}

/// One redraw of the subtrees of `run`; see [`Redrawer`] for repeated draws.
pub fn redraw_z(spec: &PathSpec, p: &SimParams, run: &SpineRun, redraw: u64) -> Result<Vec<f64>> {
    Redrawer::new(spec, p)?.draw(run, redraw)
}

/// Deterministic ceiling `(2rt+1)·exp(−inf_{s≤t} R(s) + max_{s≤t} E(s))` on the
/// decomposition right-hand side, with `E` maximised over `n` grid points.
pub fn decomposition_bound(spec: &PathSpec, r: f64, t: f64, x0: f64, n: usize) -> Result<f64> {
    let p0 = crate::path::eval_path(spec, 0.0)?;
    let curve = RateCurve::build(spec, r, &linear_grid(t, n.max(1)), 1e-9)?;
    let inf = curve.runinf.last().copied().unwrap_or(0.0);
    let e_max = curve.budget.iter().copied().fold(0.0, f64::max) + (p0.df * (x0 - p0.f)).abs();
    Ok((2.0 * r * t + 1.0) * (e_max - inf).exp())
}

/// `∫₀ᵗ 2r e^{−rs} ζ(s) ds + e^{−rt} ζ(t)` at each record time, with the
/// integral taken by the trapezoid rule over the grid-node ζ series.
pub fn spine_decomposition_rhs(run: &SpineRun) -> Result<Vec<(f64, f64)>> {
    if run.path.is_empty() || run.zeta_series.len() != run.path.len() {
        return Err(Error::Input("the decomposition needs ζ at every grid node".into()));
    }
    let r = run.r;
    let mut out = Vec::with_capacity(run.record_times.len());
    let mut acc = 0.0;
    let mut rec = 0;
    let mut prev: Option<(f64, f64)> = None;
    for &(s, zeta) in &run.zeta_series {
        let g = 2.0 * r * (-r * s).exp() * zeta;
        if let Some((s0, g0)) = prev {
            acc += 0.5 * (s - s0) * (g0 + g);
        }
        prev = Some((s, g));
        while rec < run.record_times.len() && run.record_times[rec] <= s + 1e-12 * s.max(1.0) {
            out.push((s, acc + (-r * s).exp() * zeta));
            rec += 1;
        }
    }
    Ok(out)
}
