use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::PathSpec;
use crate::sim::{run_trees, single_path_survival, SimParams};
use crate::stats::{Estimate, Method};

/// Both sides of `E|N̂(t)| = e^{rt} P(single path stays in the tube up to t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManyToOne {
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub z: f64,
}

/// Left side from the branching simulator at `p.dt`; right side from a
/// non-branching simulation at `p.dt / 10`, with the same replicate count.
pub fn many_to_one_check(spec: &PathSpec, p: &SimParams, t: f64) -> Result<ManyToOne> {
    if p.replicates < 2 {
        return Err(Error::Input("many-to-one check needs at least two replicates".into()));
    }
    if !(t > 0.0) || t > p.horizon * (1.0 + 1e-12) {
        return Err(Error::Input(format!("t={t} must lie in (0, horizon={}]", p.horizon)));
    }
    let mut q = p.clone();
    q.horizon = t;
    q.record_grid = vec![t];
    q.track_weights = false;
    let runs = run_trees(spec, &q)?;
    let counts: Vec<f64> = runs.iter().map(|r| r.survivors_at_horizon as f64).collect();
    let mut lhs = Estimate::from_samples(&counts, Method::Direct);
    lhs.diagnostics.cap_excluded = runs.iter().filter(|r| r.capped).count() as u64;

    let mut fine = q.clone();
    fine.dt = p.dt / 10.0;
    let single = single_path_survival(spec, &fine, t)?;
    let g = (p.r * t).exp();
    let mut rhs = single.clone();
    rhs.value *= g;
    rhs.std_err *= g;
    let z = lhs.z_against(&rhs);
    Ok(ManyToOne { lhs, rhs, z })
}
