use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::PathSpec;
use crate::rng::Purpose;
use crate::sim::{run_trees, ForestCtx, Observe, SimParams};
use crate::stats::{mean_se, z_score};

/// Replicate values of a putative martingale on a common time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleSample {
    pub times: Vec<f64>,
    /// `values[i][j]`: replicate `i` at `times[j]`.
    pub values: Vec<Vec<f64>>,
    pub initial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub z: Vec<f64>,
    pub pass: bool,
}

/// z-score of `(mean − initial) / SE` at each time; passes when every `|z| ≤ 3`.
pub fn martingale_test(sample: &MartingaleSample) -> Result<MartingaleReport> {
    let n = sample.values.len();
    if n < 30 {
        return Err(Error::Input(format!("martingale test needs at least 30 replicates, got {n}")));
    }
    if sample.values.iter().any(|v| v.len() != sample.times.len()) {
        return Err(Error::Input("every replicate needs one value per time".into()));
    }
    let mut rep = MartingaleReport {
        times: sample.times.clone(),
        means: Vec::new(),
        std_errs: Vec::new(),
        z: Vec::new(),
        pass: true,
    };
    let mut col = vec![0.0; n];
    for j in 0..sample.times.len() {
        for (c, v) in col.iter_mut().zip(&sample.values) {
            *c = v[j];
        }
        let (m, se) = mean_se(&col);
        let z = z_score(m - sample.initial, se, 0.0);
        rep.pass &= z.abs() <= 3.0;
        rep.means.push(m);
        rep.std_errs.push(se);
        rep.z.push(z);
    }
    Ok(rep)
}

fn collect(times: Vec<f64>, series: impl Iterator<Item = Vec<(f64, f64)>>) -> MartingaleSample {
    let values: Vec<Vec<f64>> = series.map(|s| s.into_iter().map(|(_, z)| z).collect()).collect();
    let initial = values.first().map_or(1.0, |v| v[0]);
    MartingaleSample { times, values, initial }
}

/// `Z(t)` under `P` at the record times of `p`, one row per replicate.
pub fn z_sample(spec: &PathSpec, p: &SimParams) -> Result<MartingaleSample> {
    let q = p.clone().with_weights(true);
    let runs = run_trees(spec, &q)?;
    let times = runs.first().map(|r| r.counts.iter().map(|c| c.0).collect()).unwrap_or_default();
    Ok(collect(times, runs.into_iter().map(|r| r.z_series.unwrap_or_default())))
}

/// `ζ(t)` of a single killed Brownian path (no branching) at the record times of `p`.
pub fn zeta_single_sample(spec: &PathSpec, p: &SimParams) -> Result<MartingaleSample> {
    let mut q = p.clone();
    q.r = 0.0;
    q.track_weights = false;
    let ctx = ForestCtx::new(spec, &q)?
        .with_purpose(Purpose::Single)
        .with_observe(Observe::Weights { gineq: false })?;
    let times = ctx.record_times.clone();
    let runs = crate::sim::run_trees_ctx(&ctx, q.replicates);
    Ok(collect(times, runs.into_iter().map(|r| r.z_series.unwrap_or_default())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_has_zero_scores() {
        let s = MartingaleSample {
            times: vec![0.0, 1.0, 2.0],
            values: vec![vec![1.0; 3]; 40],
            initial: 1.0,
        };
        let r = martingale_test(&s).unwrap();
        assert!(r.pass);
        assert_eq!(r.z, vec![0.0; 3]);
    }

    #[test]
    fn too_few_replicates() {
        let s = MartingaleSample {
            times: vec![0.0],
            values: vec![vec![1.0]; 29],
            initial: 1.0,
        };
        assert!(matches!(martingale_test(&s), Err(Error::Input(_))));
    }
}
