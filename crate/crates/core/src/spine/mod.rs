//! The size-biased measure `Q`: a spine with the tangent-corrected drift,
//! births at rate `2r` along it, and independent killed subtrees hanging off
//! each birth.

mod identity;
mod qtree;
mod walk;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{eval_path, PathSpec};
use crate::rates::rate_increment;
use crate::rng::{replicate_key, Purpose};
use crate::sim::{Grid, SimParams};

pub use identity::{generator_fd_residual, generator_terms, gineq_bounds, zeta};
pub use qtree::{decomposition_bound, redraw_z, simulate_q_tree, spine_decomposition_rhs, Redrawer, SubtreeSummary};
pub use walk::{drift_at, spine_drift, SpineNode};

use walk::Walker;

/// One spine trajectory under `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpineRun {
    pub replicate: u64,
    pub r: f64,
    /// Spine state at every grid node, when requested.
    pub path: Vec<SpineNode>,
    /// Spine state at each birth time, in order.
    pub births: Vec<SpineNode>,
    /// `ζ(t)` at every grid node when the path is kept, else at the record times.
    pub zeta_series: Vec<(f64, f64)>,
    pub record_times: Vec<f64>,
    /// `e^{−rt} ζ(t)` of the spine particle at the record times.
    pub spine_weight: Vec<f64>,
    /// `Z(t)` of the whole tree at the record times (Q-tree runs only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z_series: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subtrees: Option<Vec<SubtreeSummary>>,
    /// Euler proposals that left the tube and were redrawn at a finer step.
    pub rejections: u64,
    pub substeps: u64,
}

impl SpineRun {
    /// Number of births along the spine before the horizon.
    pub fn generation(&self) -> usize {
        self.births.len()
    }

    /// `log(2^n e^{−rt} ζ(t))` at record index `i` for a spine of generation `n`
    /// at that time.
    pub fn log_tilde_weight(&self, i: usize) -> f64 {
        let t = self.record_times[i];
        let n = self.births.iter().filter(|b| b.t <= t).count();
        n as f64 * std::f64::consts::LN_2 + self.spine_weight[i].ln()
    }

    /// Spine position at grid-node time `t`, by linear interpolation of the kept path.
    pub fn interpolate(&self, t: f64) -> Option<SpineNode> {
        let k = self.path.partition_point(|n| n.t <= t);
        if k == 0 || self.path.is_empty() {
            return None;
        }
        if k == self.path.len() {
            let last = self.path[k - 1];
            return ((t - last.t).abs() <= 1e-12 * t.max(1.0)).then_some(last);
        }
        Some(SpineNode::lerp(&self.path[k - 1], &self.path[k], t))
    }
}

/// `R₀` (the rate integral at zero branching rate) at increasing times.
pub(crate) fn rate0_at(spec: &PathSpec, times: &[f64]) -> Result<Vec<f64>> {
    let t_max = times.last().copied().unwrap_or(0.0).max(1e-300);
    let (mut prev, mut acc) = (0.0, 0.0);
    times
        .iter()
        .map(|&t| {
            let tol = (1e-9 * (t - prev) / t_max).max(1e-15);
            acc += rate_increment(spec, 0.0, prev, t, tol)?;
            prev = t;
            Ok(acc)
        })
        .collect()
}

pub(crate) fn walk_spine(spec: &PathSpec, p: &SimParams, replicate: u64, keep_path: bool) -> Result<SpineRun> {
    p.validate()?;
    let grid = Grid::new(p.horizon, p.dt);
    let mut record_nodes: Vec<usize> = p.record_times().iter().map(|&t| grid.node(t)).collect();
    record_nodes.dedup();
    let record_times: Vec<f64> = record_nodes.iter().map(|&k| grid.time(k)).collect();
    let zeta_nodes: Vec<usize> = if keep_path { (0..=grid.steps).collect() } else { record_nodes.clone() };
    let zeta_times: Vec<f64> = zeta_nodes.iter().map(|&k| grid.time(k)).collect();
    let r0 = rate0_at(spec, &zeta_times)?;

    let origin = eval_path(spec, 0.0)?;
    let (y0, df0) = (p.x0 - origin.f, origin.df);
    let mut w = Walker::new(
        spec,
        replicate_key(p.seed, Purpose::Spine, replicate),
        replicate_key(p.seed, Purpose::SpineBirths, replicate),
        2.0 * p.r,
        p.x0,
    )?;
    let mut run = SpineRun {
        replicate,
        r: p.r,
        path: Vec::new(),
        births: Vec::new(),
        zeta_series: Vec::with_capacity(zeta_nodes.len()),
        record_times: record_times.clone(),
        spine_weight: Vec::with_capacity(record_nodes.len()),
        z_series: None,
        subtrees: None,
        rejections: 0,
        substeps: 0,
    };
    let (mut zi, mut ri) = (0, 0);
    for k in 0..=grid.steps {
        let tk = grid.time(k);
        while w.next_birth < tk {
            let tb = w.next_birth;
            w.advance_to(tb)?;
            run.births.push(w.node);
            w.advance_birth_clock();
        }
        w.advance_to(tk)?;
        if keep_path {
            run.path.push(w.node);
        }
        // Record nodes are a subset of the ζ nodes.
        if zi < zeta_nodes.len() && zeta_nodes[zi] == k {
            let log_zeta = w.log_zeta_shift(y0, df0) - r0[zi];
            run.zeta_series.push((tk, log_zeta.exp()));
            if ri < record_nodes.len() && record_nodes[ri] == k {
                run.spine_weight.push((log_zeta - p.r * tk).exp());
                ri += 1;
            }
            zi += 1;
        }
        if grid.steps == 0 {
            break;
        }
    }
    if run.spine_weight.len() != record_nodes.len() {
        return Err(Error::Input("record grid does not align with the spine grid".into()));
    }
    run.rejections = w.rejections;
    run.substeps = w.substeps;
    Ok(run)
}

/// Simulates the spine alone (births are recorded but no subtrees are grown).
pub fn simulate_spine(spec: &PathSpec, p: &SimParams, replicate: u64, keep_path: bool) -> Result<SpineRun> {
    walk_spine(spec, p, replicate, keep_path)
}

/// Histogram of the spine's relative position `(y−f)/L` over `[burn_in, horizon]`,
/// sampled at every `stride`-th grid node, on `bins` equal cells of `(−1, 1)`.
pub fn spine_occupation(
    spec: &PathSpec,
    p: &SimParams,
    replicate: u64,
    burn_in: f64,
    stride: usize,
    bins: usize,
) -> Result<Vec<u64>> {
    p.validate()?;
    if bins == 0 || stride == 0 {
        return Err(Error::Input("bins and stride must be positive".into()));
    }
    let grid = Grid::new(p.horizon, p.dt);
    let mut w = Walker::new(spec, replicate_key(p.seed, Purpose::Spine, replicate), 0, 0.0, p.x0)?;
    let mut hist = vec![0u64; bins];
    for k in 1..=grid.steps {
        let tk = grid.time(k);
        w.advance_to(tk)?;
        if tk >= burn_in && k % stride == 0 {
            let u = 0.5 * (w.relative() + 1.0);
            hist[((u * bins as f64) as usize).min(bins - 1)] += 1;
        }
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::builtin;

    fn params() -> SimParams {
        SimParams::new(1.0, 1e-3, 1.0).with_seed(5).with_record_grid(vec![0.0, 0.5, 1.0])
    }

    #[test]
    fn spine_confined_and_reproducible() {
        let s = builtin("sinelog", &[("lambda", 1.0), ("L", 0.5)]).unwrap();
        let a = simulate_spine(&s, &params(), 2, true).unwrap();
        let b = simulate_spine(&s, &params(), 2, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.path.len(), 1001);
        for n in &a.path {
            assert!(s.point(n.t).contains(n.y));
        }
        assert_eq!(a.spine_weight.len(), 3);
        assert!((a.spine_weight[0] - 1.0).abs() < 1e-15);
        assert!(a.births.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn q_tree_starts_at_one() {
        let s = builtin("linear_const", &[("lambda", 0.5), ("L", 1.0)]).unwrap();
        let run = simulate_q_tree(&s, &params(), 0, true).unwrap();
        let z = run.z_series.as_ref().unwrap();
        assert!((z[0].1 - 1.0).abs() < 1e-15);
        assert!(z.iter().all(|&(_, v)| v > 0.0));
        assert_eq!(run.subtrees.as_ref().unwrap().len(), run.generation());
        let rhs = spine_decomposition_rhs(&run).unwrap();
        assert_eq!(rhs.len(), 3);
        assert!((rhs[0].1 - 1.0).abs() < 1e-15);
        let z1 = redraw_z(&s, &params(), &run, 0).unwrap();
        assert_eq!(z1, redraw_z(&s, &params(), &run, 0).unwrap());
        assert_ne!(z1, redraw_z(&s, &params(), &run, 1).unwrap());
    }

    #[test]
    fn occupation_counts_all_nodes() {
        let s = builtin("linear_const", &[("lambda", 0.0), ("L", 1.0)]).unwrap();
        let p = SimParams::new(0.0, 1e-2, 10.0);
        let h = spine_occupation(&s, &p, 0, 5.0, 2, 10).unwrap();
        assert_eq!(h.iter().sum::<u64>(), 251);
    }
}
