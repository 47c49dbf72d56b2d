//! Deterministic functionals of a tube: the rate integral `R(t)`, the error
//! budget `E(t)`, running infima, liminf brackets and critical-line constants.

mod critical;
mod engine;
pub mod quad;

pub use critical::{
    critical_predictions, third_region, third_thresholds, CriticalFamily, CriticalPrediction,
    CriticalRegime, CriticalReport, ThirdRegion,
};
pub use engine::{
    bracket_set, check_containment, Accuracy, error_budget, error_budget_parts, estimate_s, geometric_grid,
    growth_integrand, integrand_at, integrate_term, linear_grid, panel_points, rate_increment,
    rate_integral, running_inf, stretch_closed_form, BudgetParts, RateCurve, Term,
};
pub(crate) use engine::tail_bracket;
