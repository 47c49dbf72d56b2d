use super::curve_index;
use crate::error::{Error, Result};
use crate::rates::RateCurve;
use crate::sim::GrowthRuns;
use crate::stats::{Estimate, Method};

/// Survivor mean of `log|N̂(t)| / R(t)`. Runs excluded for hitting the cap are
/// counted in `diagnostics.cap_excluded`, extinct runs in `zero_hits`.
pub fn growth_ratio(runs: &GrowthRuns, curve: &RateCurve, t: f64) -> Result<Estimate> {
    let rate = curve.rate[curve_index(curve, t)?];
    if !(rate > 0.0) {
        return Err(Error::Regime(format!("R({t}) = {rate} is not positive")));
    }
    if runs.runs.is_empty() {
        return Err(Error::Input(format!("no uncapped survivors at t={t}")));
    }
    let ratios = runs
        .runs
        .iter()
        .map(|(_, counts)| {
            let &(_, n) = counts
                .iter()
                .find(|c| (c.0 - t).abs() <= 1e-9 * t.max(1.0))
                .ok_or_else(|| Error::Input(format!("t={t} is not a record time")))?;
            Ok((n as f64).ln() / rate)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut e = Estimate::from_samples(&ratios, Method::Ratio);
    e.diagnostics.cap_excluded = runs.cap_excluded;
    e.diagnostics.zero_hits = Some(runs.extinct);
    Ok(e)
}
