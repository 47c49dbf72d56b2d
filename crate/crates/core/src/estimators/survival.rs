use rayon::prelude::*;
use serde::Serialize;

use super::curve_index;
use crate::error::{Error, Result};
use crate::path::PathSpec;
use crate::rates::RateCurve;
use crate::sim::SimParams;
use crate::spine::simulate_q_tree;
use crate::stats::{kish_ess, Estimate, Method};

/// `P(N̂(t) ≠ ∅)` as the mean of `Z(0)/Z(t)` over trees drawn under `Q`.
///
/// Subtrees that hit the population cap make `Z(t)` a lower bound, so such
/// replicates bias the estimate upwards; their number is reported in
/// `diagnostics.cap_excluded` (they are kept, not dropped).
pub fn survival_importance(spec: &PathSpec, p: &SimParams, t: f64) -> Result<Estimate> {
    if p.replicates == 0 {
        return Err(Error::Input("survival_importance needs at least one replicate".into()));
    }
    if !(t >= 0.0) || t > p.horizon * (1.0 + 1e-12) {
        return Err(Error::Input(format!("survival time {t} must lie in [0, horizon={}]", p.horizon)));
    }
    let n = p.replicates;
    if t == 0.0 {
        let mut e = Estimate::from_samples(&[1.0], Method::Importance);
        e.n = n;
        e.diagnostics.ess = Some(n as f64);
        return Ok(e);
    }
    let mut q = p.clone();
    q.horizon = t;
    q.record_grid = vec![0.0, t];
    q.track_weights = false;
    q.birth_log = false;
    let out: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let run = simulate_q_tree(spec, &q, i, false)?;
            let z = run.z_series.as_ref().expect("q-tree runs carry Z");
            let capped = run.subtrees.as_ref().is_some_and(|s| s.iter().any(|s| s.capped_at.is_some()));
            Ok((z[0].1 / z[z.len() - 1].1, capped))
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = out.iter().map(|o| o.0).collect();
    let mut e = Estimate::from_samples(&ratios, Method::Importance);
    e.diagnostics.ess = Some(kish_ess(&ratios));
    e.diagnostics.cap_excluded = out.iter().filter(|o| o.1).count() as u64;
    Ok(e)
}

/// `log P(N̂(t) ≠ ∅) / inf_{s≤t} R(s)` at one probe time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayPoint {
    pub t: f64,
    pub ratio: f64,
    /// Zero survivors: `ratio` uses the rule-of-three bound `3/n` and is a lower bound.
    pub one_sided: bool,
    /// The estimate is 1, so the ratio carries no decay information yet.
    pub pre_asymptotic: bool,
}

pub fn survival_decay_ratio(estimates: &[(f64, Estimate)], curve: &RateCurve) -> Result<Vec<DecayPoint>> {
    estimates
        .iter()
        .map(|(t, e)| {
            let inf = curve.runinf[curve_index(curve, *t)?];
            if !(inf < 0.0) {
                return Err(Error::Regime(format!("running infimum of R is {inf} at t={t}, not negative")));
            }
            let (p, one_sided) = if e.value > 0.0 { (e.value, false) } else { (3.0 / e.n as f64, true) };
            Ok(DecayPoint {
                t: *t,
                ratio: p.ln() / inf,
                one_sided,
                pre_asymptotic: p >= 1.0,
            })
        })
        .collect()
}
