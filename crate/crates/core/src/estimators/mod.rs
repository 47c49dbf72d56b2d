//! Monte Carlo estimators built on the forward and spine simulators, and the
//! statistical checks that compare them with each other and with the rate engine.

mod growth;
mod many_to_one;
mod martingale;
mod occupation;
mod regime;
mod survival;

pub use growth::growth_ratio;
pub use many_to_one::{many_to_one_check, ManyToOne};
pub use martingale::{martingale_test, z_sample, zeta_single_sample, MartingaleReport, MartingaleSample};
pub use occupation::{occupation_bound, occupation_tail};
pub use regime::{classify_regime, Regime, RegimeReport};
pub use survival::{survival_decay_ratio, survival_importance, DecayPoint};

use crate::error::{Error, Result};
use crate::rates::RateCurve;

/// Index of the curve grid point at `t`.
pub(crate) fn curve_index(curve: &RateCurve, t: f64) -> Result<usize> {
    curve
        .grid
        .iter()
        .position(|&g| (g - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or_else(|| Error::Input(format!("t={t} is not a point of the rate curve grid")))
}
