//! Forward simulation of dyadic branching Brownian motion killed on leaving a tube.
//!
//! Particles take Gaussian steps of variance `dt` on a fixed grid and carry
//! exponential fission clocks drawn at birth; fissions are resolved at their
//! exact times within a step. A particle is removed when a grid position is
//! outside the tube or, with the bridge correction on, when the Brownian
//! bridge between two grid positions crosses either (linearised) boundary.

pub mod engine;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use tree::run_trees_ctx;
pub use engine::{bridge_survival, BirthRecord, Frame, Grid, Particle};
pub use tree::{
    growth_trajectories, run_forest, run_trees, simulate_tree, simulate_tree_replicate, single_path_survival,
    survival_direct, ForestCtx, ForestResult, GrowthRuns, Observe,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub r: f64,
    pub dt: f64,
    pub horizon: f64,
    pub cap: usize,
    pub seed: u64,
    pub replicates: u64,
    /// Times at which `|N̂(t)|` is recorded; empty means the default geometric grid.
    pub record_grid: Vec<f64>,
    /// Starting position of the initial particle.
    pub x0: f64,
    /// Apply the Brownian-bridge crossing correction.
    pub bridge: bool,
    /// Also compute `Z(t)` and the `G_u` envelope check at record times.
    pub track_weights: bool,
    pub birth_log: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            r: 1.0,
            dt: 1e-3,
            horizon: 1.0,
            cap: 1_000_000,
            seed: 0,
            replicates: 1,
            record_grid: Vec::new(),
            x0: 0.0,
            bridge: true,
            track_weights: false,
            birth_log: false,
        }
    }
}

/// 0 followed by `n` geometric points ending at `horizon`.
pub fn default_record_grid(horizon: f64, dt: f64, n: usize) -> Vec<f64> {
    if horizon <= 0.0 {
        return vec![0.0];
    }
    let lo = (horizon * 1e-3).max(dt).min(horizon);
    let mut g = vec![0.0];
    if n <= 1 || lo >= horizon {
        g.push(horizon);
        return g;
    }
    let ratio = (horizon / lo).ln() / (n - 1) as f64;
    g.extend((0..n).map(|k| lo * (ratio * k as f64).exp()));
    *g.last_mut().unwrap() = horizon;
    g
}

impl SimParams {
    pub fn new(r: f64, dt: f64, horizon: f64) -> Self {
        Self {
            r,
            dt,
            horizon,
            ..Self::default()
        }
    }

    pub fn with_replicates(mut self, n: u64) -> Self {
        self.replicates = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_record_grid(mut self, grid: Vec<f64>) -> Self {
        self.record_grid = grid;
        self
    }

    pub fn with_weights(mut self, on: bool) -> Self {
        self.track_weights = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Input(m));
        if !(self.r >= 0.0) || !self.r.is_finite() {
            return bad(format!("branching rate must be finite and non-negative, got {}", self.r));
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be finite and non-negative, got {}", self.horizon));
        }
        if self.cap < 1 {
            return bad("cap must be at least 1".into());
        }
        let g = &self.record_grid;
        if g.iter().any(|&t| !(t >= 0.0) || t > self.horizon * (1.0 + 1e-12)) {
            return bad("record grid must lie in [0, horizon]".into());
        }
        if g.windows(2).any(|w| w[1] <= w[0]) {
            return bad("record grid must be increasing".into());
        }
        Ok(())
    }

    /// The record grid actually used.
    pub fn record_times(&self) -> Vec<f64> {
        if self.record_grid.is_empty() {
            default_record_grid(self.horizon, self.dt, 64)
        } else {
            self.record_grid.clone()
        }
    }
}

/// `G_u` envelope bookkeeping for one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GineqStats {
    /// Particle checks performed over all record times.
    pub checks: u64,
    /// Particles alive at the horizon whose full path was checked.
    pub paths: u64,
    /// Violations of `|excess| ≤ E` with `E` summed on the simulation grid.
    pub violations_grid: u64,
    /// Violations of `|excess| ≤ E` with `E` from adaptive quadrature.
    pub violations_quad: u64,
    /// Largest `|excess| / E` seen (0 when `E = 0` and the excess vanishes).
    pub max_ratio: f64,
}

impl GineqStats {
    pub fn merge(&mut self, o: &GineqStats) {
        self.checks += o.checks;
        self.paths += o.paths;
        self.violations_grid += o.violations_grid;
        self.violations_quad += o.violations_quad;
        self.max_ratio = self.max_ratio.max(o.max_ratio);
    }
}

/// One forward simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRun {
    pub replicate: u64,
    /// Extinction time; `None` when the population is alive at the horizon.
    pub extinction_time: Option<f64>,
    pub capped: bool,
    /// First time a fission was suppressed. Counts after it undercount `|N̂|`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub capped_at: Option<f64>,
    pub counts: Vec<(f64, u64)>,
    pub survivors_at_horizon: u64,
    /// `Z(t)` at the record times.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z_series: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gineq: Option<GineqStats>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub birth_log: Option<Vec<BirthRecord>>,
}

impl TreeRun {
    pub fn survived(&self) -> bool {
        self.survivors_at_horizon > 0
    }

    /// Count at the record time nearest `t`.
    pub fn count_at(&self, t: f64) -> Option<u64> {
        self.counts
            .iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|c| c.1)
    }

    /// Whether the count at `t` is exact (no suppressed fission before `t`).
    pub fn exact_at(&self, t: f64) -> bool {
        self.capped_at.is_none_or(|c| t < c)
    }
}
