//! Heuristic checks of the usual conditions on a finite set of horizons.
//!
//! Limits cannot be certified at finite times, so conditions (III) and (IV)
//! come back as a three-way [`Verdict`], and the report is marked heuristic.

use serde::Serialize;

use super::{eval_path, PathSpec};
use crate::error::{Error, Result};
use crate::rates::{tail_bracket, Accuracy, RateCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionsConfig {
    /// Threshold for `E(t)/t` at the largest horizon.
    pub tol: f64,
    /// `E(t)/t` counts as stalled when its decay factor per decade of `t` exceeds this.
    pub stall_ratio: f64,
    pub quad_tol: f64,
    /// The verdicts only need signs and decay trends, so the quadratures run looser than the rate engine's default.
    pub accuracy: Accuracy,
}

impl Default for ConditionsConfig {
    fn default() -> Self {
        Self {
            tol: 0.1,
            stall_ratio: 0.9,
            quad_tol: 1e-9,
            accuracy: Accuracy {
                rate_rel: 1e-8,
                budget_rel: 1e-6,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsualConditionsReport {
    pub c1_ok: bool,
    pub c2_ok: bool,
    /// First failing derivative pair and time, if any.
    pub c2_failure: Option<(String, f64)>,
    pub e_over_t: Vec<(f64, f64)>,
    pub c3_verdict: Verdict,
    pub s_bracket: (f64, f64),
    pub c4_verdict: Verdict,
    /// Always true: finite horizons cannot settle limit conditions.
    pub heuristic: bool,
}

impl UsualConditionsReport {
    pub fn all_hold(&self) -> bool {
        self.c1_ok && self.c2_ok && self.c3_verdict == Verdict::Holds && self.c4_verdict == Verdict::Holds
    }
}

const PAIRS: [&str; 4] = ["f/df", "df/ddf", "L/dL", "dL/ddL"];

/// Default finite-difference step at `t`, shrunk below the profile's resolution.
pub fn fd_step(spec: &PathSpec, t: f64) -> f64 {
    let h = 1e-4 * t.max(1.0);
    match spec.resolution(t) {
        Some(res) => h.min(1e-2 * res),
        None => h,
    }
}

/// `|numerical − analytic|` derivative errors for the pairs f/df, df/ddf,
/// L/dL and dL/ddL. Uses central differences, or second-order one-sided
/// differences when `t < h`.
pub fn fd_errors(spec: &PathSpec, t: f64, h: f64) -> Result<[f64; 4]> {
    let vals = |s: f64| -> Result<[f64; 6]> {
        let p = eval_path(spec, s)?;
        Ok([p.f, p.df, p.ddf, p.l, p.dl, p.ddl])
    };
    let here = vals(t)?;
    let deriv: Box<dyn Fn(usize) -> f64> = if t >= h {
        let (a, b) = (vals(t - h)?, vals(t + h)?);
        Box::new(move |k| (b[k] - a[k]) / (2.0 * h))
    } else {
        let (a, b) = (vals(t + h)?, vals(t + 2.0 * h)?);
        Box::new(move |k| (-3.0 * here[k] + 4.0 * a[k] - b[k]) / (2.0 * h))
    };
    let pairs = [(0, 1), (1, 2), (3, 4), (4, 5)];
    let mut out = [0.0; 4];
    for (slot, (v, d)) in out.iter_mut().zip(pairs) {
        *slot = (deriv(v) - here[d]).abs();
    }
    Ok(out)
}

fn derivatives_consistent(spec: &PathSpec, t_end: f64) -> Result<Option<(String, f64)>> {
    let mut probes = vec![0.0, 0.25, 0.5];
    let mut t = 1.0;
    while t <= t_end {
        probes.push(t);
        t *= 2.0;
    }
    for &t in &probes {
        let h = fd_step(spec, t);
        let coarse = fd_errors(spec, t, h)?;
        let fine = fd_errors(spec, t, 0.5 * h)?;
        let p = eval_path(spec, t)?;
        let mags = [p.f, p.df, p.ddf, p.l, p.dl, p.ddl];
        let scales = [mags[0].abs().max(mags[1].abs()), mags[1].abs().max(mags[2].abs()),
            mags[3].abs().max(mags[4].abs()), mags[4].abs().max(mags[5].abs())];
        for k in 0..4 {
            let scale = scales[k].max(1.0);
            let tiny = 1e-7 * scale;
            if coarse[k] > tiny && fine[k] > 0.5 * coarse[k] {
                return Ok(Some((PAIRS[k].to_string(), t)));
            }
        }
    }
    Ok(None)
}

fn c3_verdict(points: &[(f64, f64)], cfg: &ConditionsConfig) -> Verdict {
    let n = points.len();
    let last = points[n - 1].1;
    if !last.is_finite() {
        return Verdict::Violated;
    }
    if n < 2 {
        return if last < cfg.tol { Verdict::Holds } else { Verdict::Inconclusive };
    }
    let tail = &points[n - n.div_ceil(2).max(2)..];
    let decreasing = tail.windows(2).all(|w| w[1].1 <= w[0].1);
    if last < cfg.tol && decreasing {
        return Verdict::Holds;
    }
    let (t0, e0) = points[n - 2];
    let (t1, e1) = points[n - 1];
    let decades = (t1 / t0).log10();
    let per_decade = if e0 > 0.0 { (e1 / e0).powf(1.0 / decades) } else { f64::INFINITY };
    if last > cfg.tol && per_decade > cfg.stall_ratio {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

fn c4_verdict(bracket: (f64, f64)) -> Verdict {
    let (lo, hi) = bracket;
    if !lo.is_finite() || !hi.is_finite() {
        Verdict::Violated
    } else if lo.abs().max(hi.abs()) > 1e8 {
        Verdict::Inconclusive
    } else {
        Verdict::Holds
    }
}

pub fn check_usual_conditions(spec: &PathSpec, r: f64, horizons: &[f64], tol: f64) -> Result<UsualConditionsReport> {
    let cfg = ConditionsConfig {
        tol,
        ..ConditionsConfig::default()
    };
    check_usual_conditions_with(spec, r, horizons, &cfg)
}

pub fn check_usual_conditions_with(
    spec: &PathSpec,
    r: f64,
    horizons: &[f64],
    cfg: &ConditionsConfig,
) -> Result<UsualConditionsReport> {
    if horizons.is_empty() {
        return Err(Error::Input("probe horizons must be nonempty".into()));
    }
    if horizons[0] <= 0.0 || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("probe horizons must be positive and increasing".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::Input(format!("tol must be positive, got {}", cfg.tol)));
    }
    let t_end = *horizons.last().unwrap();
    let c1_ok = spec.starts_at_origin();
    let c2_failure = derivatives_consistent(spec, t_end)?;
    let curve = RateCurve::build_with(spec, r, horizons, cfg.quad_tol, cfg.accuracy)?;
    let e_over_t: Vec<(f64, f64)> = curve.grid.iter().zip(&curve.budget).map(|(&t, &e)| (t, e / t)).collect();
    let s_bracket = tail_bracket(&curve);
    Ok(UsualConditionsReport {
        c1_ok,
        c2_ok: c2_failure.is_none(),
        c2_failure,
        c3_verdict: c3_verdict(&e_over_t, cfg),
        e_over_t,
        s_bracket,
        c4_verdict: c4_verdict(s_bracket),
        heuristic: true,
    })
}
