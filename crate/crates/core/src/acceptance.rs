//! The acceptance suite A1–A15.
//!
//! Every criterion runs at the sizes and tolerances it is stated with under
//! [`Budget::Full`]; [`Budget::Smoke`] shrinks replicate counts and horizons
//! so the whole suite finishes in about two minutes, and its verdicts are
//! indicative only.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{
    classify_regime, growth_ratio, many_to_one_check, martingale_test, occupation_bound, occupation_tail,
    survival_decay_ratio, survival_importance, z_sample,
};
use crate::path::{builtin, check_usual_conditions, PathSpec, Verdict};
use crate::rates::{critical_predictions, geometric_grid, rate_integral, CriticalFamily, CriticalRegime, RateCurve};
use crate::sim::{growth_trajectories, run_trees, survival_direct, SimParams};
use crate::spine::{simulate_q_tree, simulate_spine, spine_decomposition_rhs, spine_occupation, Redrawer};
use crate::stats::{mean_se, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Smoke,
    Full,
}

impl std::str::FromStr for Budget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Budget> {
        match s {
            "smoke" => Ok(Budget::Smoke),
            "full" => Ok(Budget::Full),
            other => Err(Error::Input(format!("unknown budget {other:?}; expected smoke or full"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcceptConfig {
    pub budget: Budget,
    pub seed: u64,
    /// Multiplies every simulation time step (1 for the stated runs).
    pub dt_scale: f64,
}

impl AcceptConfig {
    pub fn new(budget: Budget) -> Self {
        AcceptConfig {
            budget,
            seed: 20240101,
            dt_scale: 1.0,
        }
    }

    fn full(&self) -> bool {
        self.budget == Budget::Full
    }

    /// `full` replicates under the full budget, `smoke` otherwise.
    fn n(&self, full: u64, smoke: u64) -> u64 {
        if self.full() {
            full
        } else {
            smoke
        }
    }

    fn dt(&self, dt: f64) -> f64 {
        dt * self.dt_scale
    }
}

/// Verdict of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub pass: bool,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
    pub seconds: f64,
}

struct Outcome {
    pass: bool,
    summary: String,
    metrics: BTreeMap<String, f64>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Outcome {
            pass,
            summary: summary.into(),
            metrics: BTreeMap::new(),
        }
    }

    fn metric(mut self, k: impl Into<String>, v: f64) -> Self {
        self.metrics.insert(k.into(), v);
        self
    }
}

type Check = fn(&AcceptConfig) -> Result<Outcome>;

const CRITERIA: [(&str, &str, Check); 15] = [
    ("A1", "analytic rates, linear tubes", a1),
    ("A2", "golden-ratio oscillation", a2),
    ("A3", "non-differentiable gradient oscillation", a3),
    ("A4", "critical constants", a4),
    ("A5", "Z is a martingale under P", a5),
    ("A6", "spine decomposition", a6),
    ("A7", "extinction identity", a7),
    ("A8", "survival decay", a8),
    ("A9", "growth ratio", a9),
    ("A10", "many-to-one", a10),
    ("A11", "G_u envelope", a11),
    ("A12", "spine ground state", a12),
    ("A13", "occupation-time bound", a13),
    ("A14", "usual-conditions checker", a14),
    ("A15", "determinism", a15),
];

/// `(id, title)` of every criterion, in order.
pub fn criteria() -> Vec<(&'static str, &'static str)> {
    CRITERIA.iter().map(|c| (c.0, c.1)).collect()
}

/// Runs one criterion; errors become a failing verdict.
pub fn run_criterion(id: &str, cfg: &AcceptConfig) -> Result<CriterionResult> {
    let (_, title, check) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::Input(format!("unknown criterion {id}")))?;
    let start = Instant::now();
    let out = check(cfg).unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
    Ok(CriterionResult {
        id: id.to_string(),
        pass: out.pass,
        summary: format!("{title}: {}", out.summary),
        metrics: out.metrics,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs the criteria whose ids are in `only` (all of them when empty), calling
/// `report` after each one.
pub fn run_acceptance(cfg: &AcceptConfig, only: &[String], mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    for (id, _, _) in CRITERIA.iter() {
        if !only.is_empty() && !only.iter().any(|o| o.eq_ignore_ascii_case(id)) {
            continue;
        }
        let r = run_criterion(id, cfg).expect("criterion ids come from the table");
        report(&r);
        out.push(r);
    }
    out
}

fn lc(lambda: f64, l: f64) -> PathSpec {
    builtin("linear_const", &[("lambda", lambda), ("L", l)]).expect("linear_const is a valid builtin")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn a1(_: &AcceptConfig) -> Result<Outcome> {
    let combos = [(0.0, 1.0, 1.0), (1.0, 1.0, 0.5), (0.5, 2.0, 1.0), (-2.0, 0.5, 3.0), (3.0, 10.0, 0.1)];
    let mut worst = 0.0f64;
    for &(lambda, l, r) in &combos {
        let s = lc(lambda, l);
        for t in [1.0, 10.0, 100.0] {
            let exact = (r - lambda * lambda / 2.0 - PI * PI / (8.0 * l * l)) * t;
            worst = worst.max(rel(rate_integral(&s, r, t, 1e-9)?, exact));
        }
    }
    Ok(Outcome::new(worst <= 1e-8, format!("worst relative error {worst:.2e} (tolerance 1e-8)")).metric("worst_rel", worst))
}

/// Extremes of `R(t)/t` over a curve.
fn ratio_extremes(curve: &RateCurve) -> (f64, f64) {
    (0..curve.len())
        .map(|i| curve.ratio(i))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn a2(_: &AcceptConfig) -> Result<Outcome> {
    let (lambda, l, r) = (1.0, 1.0, 3.0);
    let s = builtin("sinelog", &[("lambda", lambda), ("L", l)])?;
    let curve = RateCurve::build(&s, r, &geometric_grid(1e3, 1e6, 6000), 1e-8)?;
    let (lo, hi) = ratio_extremes(&curve);
    let base = r - PI * PI / (8.0 * l * l);
    let sq5 = 5f64.sqrt();
    let (want_lo, want_hi) = (
        base - lambda * lambda / sq5 * (sq5 + 1.0) / 2.0,
        base - lambda * lambda / sq5 * (sq5 - 1.0) / 2.0,
    );
    let (e_lo, e_hi) = (rel(lo, want_lo), rel(hi, want_hi));
    Ok(Outcome::new(
        e_lo <= 0.01 && e_hi <= 0.01,
        format!("inf {lo:.6} vs {want_lo:.6} ({e_lo:.2e}), sup {hi:.6} vs {want_hi:.6} ({e_hi:.2e})"),
    )
    .metric("liminf", lo)
    .metric("limsup", hi)
    .metric("rel_err_inf", e_lo)
    .metric("rel_err_sup", e_hi))
}

fn a3(_: &AcceptConfig) -> Result<Outcome> {
    let (l, r) = (1.0, 2.0);
    let s = builtin("piecewise_gradient", &[("L", l), ("eta", 1e-2)])?;
    let mut grid = geometric_grid(256.0, 1048576.0, 4000);
    for k in 4..=10 {
        let a = 4f64.powi(k);
        grid.extend([a, 2.0 * a]);
    }
    grid.retain(|&t| t <= 1048576.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let curve = RateCurve::build(&s, r, &grid, 1e-8)?;
    let (lo, hi) = ratio_extremes(&curve);
    let base = r - PI * PI / (8.0 * l * l);
    let (want_lo, want_hi) = (base - 1.0 / 3.0, base - 1.0 / 6.0);
    let (e_lo, e_hi) = (rel(lo, want_lo), rel(hi, want_hi));
    Ok(Outcome::new(
        e_lo <= 0.02 && e_hi <= 0.02,
        format!("min {lo:.6} vs {want_lo:.6} ({e_lo:.2e}), max {hi:.6} vs {want_hi:.6} ({e_hi:.2e})"),
    )
    .metric("min", lo)
    .metric("max", hi)
    .metric("rel_err_min", e_lo)
    .metric("rel_err_max", e_hi))
}

fn a4(_: &AcceptConfig) -> Result<Outcome> {
    let m = |kv: &[(&str, f64)]| kv.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>();
    let mut worst = 0.0f64;
    let mut note = |got: f64, want: f64| worst = worst.max((got - want).abs() / want.abs().max(1.0));
    let (alpha, gamma, r) = (0.25, 1.0, 0.5);
    for beta in [0.2, 0.25, 0.3] {
        let c = critical_predictions(CriticalFamily::BetaEx, &m(&[("alpha", alpha), ("beta", beta), ("gamma", gamma), ("r", r)]))?;
        let p = c.get(CriticalRegime::SubcriticalBeta).ok_or_else(|| Error::Input("missing prediction".into()))?;
        note(p.constant, -PI * PI / (8.0 * gamma * gamma * (1.0 - 2.0 * beta)));
        note(p.exponent, 1.0 - 2.0 * beta);
    }
    for beta in [0.4, 0.5, 0.75] {
        let (a, g, rr) = (0.7, 1.3, 2.0);
        let c = critical_predictions(CriticalFamily::BetaEx, &m(&[("alpha", a), ("beta", beta), ("gamma", g), ("r", rr)]))?;
        let p = c.get(CriticalRegime::SupercriticalBeta).ok_or_else(|| Error::Input("missing prediction".into()))?;
        note(p.constant, (a + g) * (2.0 * rr).sqrt());
        note(p.exponent, beta);
    }
    for &(a, g, rr) in &[(0.1, 0.5, 0.5), (5.0, 3.0, 0.5), (4.0, 0.8, 2.0)] {
        let c = critical_predictions(CriticalFamily::ThirdEx, &m(&[("alpha", a), ("gamma", g), ("r", rr)]))?;
        let sq = (2.0 * rr).sqrt();
        let g0 = (3.0 * PI * PI / (8.0 * sq)).powf(1.0 / 3.0);
        let g1 = (3.0 * PI * PI / (4.0 * sq)).powf(1.0 / 3.0);
        note(c.gamma0.unwrap_or(f64::NAN), g0);
        note(c.gamma1.unwrap_or(f64::NAN), g1);
        let gm = if g > g1 { g } else { g1 };
        let want = [
            (CriticalRegime::ThirdLower, a * sq - 3.0 * PI * PI / (8.0 * g * g) - g * sq),
            (CriticalRegime::ThirdUpper, a * sq - 3.0 * PI * PI / (8.0 * g * g) + g * sq),
            (CriticalRegime::ThirdGrowthLower, a * sq - 3.0 * PI * PI / (8.0 * gm * gm) - gm * sq),
            (CriticalRegime::ThirdGrowthUpper, a * sq - 3.0 * PI * PI / (8.0 * g * g) + g * sq),
        ];
        for (reg, w) in want {
            note(c.get(reg).map_or(f64::NAN, |p| p.constant), w);
        }
    }
    let beta = 0.25;
    let s = builtin("betaex", &[("alpha", alpha), ("beta", beta), ("gamma", gamma), ("r", r)])?;
    let t = 1e6;
    let scaled = rate_integral(&s, r, t, 1e-8)? / t.powf(1.0 - 2.0 * beta);
    let want = -PI * PI / (8.0 * gamma * gamma * (1.0 - 2.0 * beta));
    let e = rel(scaled, want);
    let exact_ok = worst <= 1e-12;
    Ok(Outcome::new(
        exact_ok && e <= 0.01,
        format!("constants max deviation {worst:.1e}; R(1e6)/t^(1/2) = {scaled:.5} vs {want:.5} ({e:.2e})"),
    )
    .metric("constant_dev", worst)
    .metric("scaled_rate", scaled)
    .metric("scaled_rel_err", e))
}

fn a5(c: &AcceptConfig) -> Result<Outcome> {
    let s = lc(0.0, 1.0);
    let p = SimParams::new(1.0, c.dt(1e-3), 2.0)
        .with_seed(c.seed ^ 5)
        .with_replicates(c.n(10_000, 1_000))
        .with_record_grid(vec![0.0, 0.5, 1.0, 2.0]);
    let rep = martingale_test(&z_sample(&s, &p)?)?;
    let zmax = rep.z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let means: Vec<String> = rep.times.iter().zip(&rep.means).skip(1).map(|(t, m)| format!("{t}:{m:.4}")).collect();
    Ok(Outcome::new(rep.pass, format!("means {} max |z| {zmax:.2}", means.join(" "))).metric("max_abs_z", zmax))
}

fn a6(c: &AcceptConfig) -> Result<Outcome> {
    let s = lc(0.0, 1.0);
    let p = SimParams::new(1.0, c.dt(1e-3), 1.0)
        .with_seed(c.seed ^ 6)
        .with_record_grid(vec![0.0, 1.0]);
    let (paths, redraws) = (c.n(100, 20), c.n(1000, 200));
    let rd = Redrawer::new(&s, &p)?;
    let zs: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let run = simulate_spine(&s, &p, i, true)?;
            let rhs = spine_decomposition_rhs(&run)?[1].1;
            let draws = (0..redraws).map(|j| Ok(rd.draw(&run, j)?[1])).collect::<Result<Vec<f64>>>()?;
            let (m, se) = mean_se(&draws);
            Ok((m - rhs) / se)
        })
        .collect::<Result<_>>()?;
    let within = zs.iter().filter(|z| z.abs() <= 3.0).count() as u64;
    let need = (paths * 95).div_ceil(100);
    Ok(Outcome::new(within >= need, format!("{within}/{paths} paths within 3 SE (need {need})")).metric("within", within as f64))
}

fn a7(c: &AcceptConfig) -> Result<Outcome> {
    let s = lc(0.0, 1.0);
    let r = 0.2;
    let mut ok = true;
    let mut parts = Vec::new();
    let mut out = Outcome::new(true, "");
    for t in [3.0, 5.0] {
        let pd = SimParams::new(r, c.dt(1e-3), t).with_seed(c.seed ^ 71).with_replicates(c.n(100_000, 10_000));
        let pi = SimParams::new(r, c.dt(1e-3), t).with_seed(c.seed ^ 72).with_replicates(c.n(10_000, 1_000));
        let d = survival_direct(&s, &pd, t)?;
        let i = survival_importance(&s, &pi, t)?;
        let z = d.z_against(&i);
        ok &= z.abs() <= 3.0;
        parts.push(format!("t={t}: direct {:.5}±{:.5} importance {:.5}±{:.5} z={z:.2}", d.value, d.std_err, i.value, i.std_err));
        out = out.metric(format!("z_t{t}"), z);
    }
    let t = 10.0;
    let n = c.n(10_000, 1_000);
    let pi = SimParams::new(r, c.dt(1e-3), t).with_seed(c.seed ^ 73).with_replicates(n);
    let i = survival_importance(&s, &pi, t)?;
    let pd = SimParams::new(r, c.dt(1e-3), t).with_seed(c.seed ^ 74).with_replicates(n);
    let d = survival_direct(&s, &pd, t)?;
    // The direct SE at the same n, evaluated at the better-resolved probability.
    let direct_se = (i.value * (1.0 - i.value) / n as f64).sqrt();
    let gain = direct_se / i.std_err;
    ok &= gain >= 5.0;
    parts.push(format!(
        "t=10: importance {:.3e}±{:.1e}, direct {}/{n} hits, SE gain {gain:.1}",
        i.value,
        i.std_err,
        n - d.diagnostics.zero_hits.unwrap_or(n)
    ));
    out.pass = ok;
    out.summary = parts.join("; ");
    Ok(out.metric("se_gain_t10", gain))
}

fn a8(c: &AcceptConfig) -> Result<Outcome> {
    let s = lc(0.0, 1.0);
    let r = 0.2;
    let t = 5.0;
    let p = SimParams::new(r, c.dt(1e-3), t).with_seed(c.seed ^ 8).with_replicates(c.n(10_000, 1_000));
    let est = survival_importance(&s, &p, t)?;
    let curve = RateCurve::build(&s, r, &[t], 1e-9)?;
    let ratio = survival_decay_ratio(&[(t, est.clone())], &curve)?[0].ratio;
    Ok(Outcome::new(
        (0.7..=1.3).contains(&ratio),
        format!("P = {:.4e}±{:.1e}, log P / runinf = {ratio:.4}", est.value, est.std_err),
    )
    .metric("ratio", ratio))
}

fn a9(c: &AcceptConfig) -> Result<Outcome> {
    let s = lc(0.0, 2.0);
    let t = 15.0;
    let p = SimParams::new(1.0, c.dt(1e-3), t)
        .with_seed(c.seed ^ 9)
        .with_replicates(c.n(40, 6))
        .with_cap(1_000_000)
        .with_record_grid(vec![t]);
    let runs = growth_trajectories(&s, &p)?;
    let curve = RateCurve::build(&s, 1.0, &[t], 1e-9)?;
    let e = growth_ratio(&runs, &curve, t)?;
    Ok(Outcome::new(
        (0.8..=1.2).contains(&e.value),
        format!(
            "log|N|/R = {:.4}±{:.4} over {} survivors ({} extinct, {} capped)",
            e.value, e.std_err, e.n, runs.extinct, runs.cap_excluded
        ),
    )
    .metric("ratio", e.value)
    .metric("std_err", e.std_err))
}

fn a10(c: &AcceptConfig) -> Result<Outcome> {
    let t = 2.0;
    let specs = [("huge", lc(0.0, 1e6)), ("constant", lc(0.0, 1.0)), ("drifting", lc(1.0, 1.0))];
    let mut out = Outcome::new(true, "");
    let mut parts = Vec::new();
    for (k, (name, s)) in specs.iter().enumerate() {
        let p = SimParams::new(1.0, c.dt(1e-3), t).with_seed(c.seed ^ (100 + k as u64)).with_replicates(c.n(10_000, 2_000));
        let m = many_to_one_check(s, &p, t)?;
        out.pass &= m.z.abs() <= 3.0;
        parts.push(format!("{name}: {:.4} vs {:.4} z={:.2}", m.lhs.value, m.rhs.value, m.z));
        out = out.metric(format!("z_{name}"), m.z);
    }
    out.summary = parts.join("; ");
    Ok(out)
}

/// First multiple of 0.5 at which `R` reaches `target`, capped at `t_max`.
fn horizon_for(spec: &PathSpec, r: f64, target: f64, t_max: f64) -> Result<f64> {
    let grid: Vec<f64> = (1..=(2.0 * t_max) as usize).map(|k| 0.5 * k as f64).collect();
    let curve = RateCurve::build(spec, r, &grid, 1e-8)?;
    Ok(curve.grid.iter().zip(&curve.rate).find(|(_, &v)| v >= target).map_or(t_max, |(&t, _)| t))
}

fn a11(c: &AcceptConfig) -> Result<Outcome> {
    let b = |name: &str, kv: &[(&str, f64)]| builtin(name, kv);
    let specs = [
        lc(0.5, 2.0),
        b("linear_power", &[("lambda", 0.3), ("beta", 0.5), ("c", 1.0)])?,
        b("sinelog", &[("lambda", 0.5), ("L", 2.0)])?,
        b("piecewise_gradient", &[("L", 2.0), ("eta", 0.1)])?,
        b("betaex", &[("alpha", 1.0), ("beta", 0.6), ("gamma", 1.5), ("r", 1.0)])?,
        b("thirdex", &[("alpha", 3.0), ("gamma", 2.0), ("r", 1.0)])?,
    ];
    let need = c.n(100_000, 10_000);
    let per_spec = need.div_ceil(specs.len() as u64);
    let target = if c.full() { 8.5 } else { 7.0 };
    let (mut paths, mut checks, mut vg, mut vq, mut worst) = (0u64, 0u64, 0u64, 0u64, 0.0f64);
    for (k, s) in specs.iter().enumerate() {
        let t = horizon_for(s, 1.0, target, 15.0)?;
        let p = SimParams::new(1.0, c.dt(1e-3), t)
            .with_seed(c.seed ^ (1100 + k as u64))
            .with_weights(true)
            .with_record_grid(crate::sim::default_record_grid(t, c.dt(1e-3), 16));
        // Replicate batches until this spec contributed its share.
        let (mut got, mut next) = (0u64, 0u64);
        while got < per_spec && next < 64 {
            for i in next..next + 2 {
                let g = crate::sim::simulate_tree_replicate(s, &p, i)?.gineq.unwrap_or_default();
                got += g.paths;
                checks += g.checks;
                vg += g.violations_grid;
                vq += g.violations_quad;
                worst = worst.max(g.max_ratio);
            }
            next += 2;
        }
        paths += got;
    }
    Ok(Outcome::new(
        paths >= need && vg == 0 && vq == 0,
        format!("{paths} surviving paths (need {need}), {checks} checks, violations grid {vg} quad {vq}, max |excess|/E {worst:.3}"),
    )
    .metric("paths", paths as f64)
    .metric("violations", (vg + vq) as f64)
    .metric("max_ratio", worst))
}

fn a12(c: &AcceptConfig) -> Result<Outcome> {
    let s = lc(0.0, 1.0);
    let stride = 5;
    let samples = c.n(1_000_000, 200_000);
    let dt = c.dt(1e-2);
    let burn = 10.0;
    let horizon = burn + samples as f64 * stride as f64 * dt;
    let p = SimParams::new(0.0, dt, horizon).with_seed(c.seed ^ 12);
    let bins = 20;
    let hist = spine_occupation(&s, &p, 0, burn, stride, bins)?;
    let n: u64 = hist.iter().sum();
    let cdf = |y: f64| 0.5 * (y + 1.0) + (PI * y).sin() / (2.0 * PI);
    let l1: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let a = -1.0 + 2.0 * i as f64 / bins as f64;
            (h as f64 / n as f64 - (cdf(a + 2.0 / bins as f64) - cdf(a))).abs()
        })
        .sum();
    // Confinement over accepted steps of short Q-tree spines.
    let q = SimParams::new(1.0, c.dt(1e-3), 2.0).with_seed(c.seed ^ 121).with_record_grid(vec![0.0, 2.0]);
    let violations: u64 = (0..c.n(200, 50))
        .into_par_iter()
        .map(|i| {
            let run = simulate_spine(&s, &q, i, true)?;
            Ok(run.path.iter().filter(|n| !s.point(n.t).contains(n.y)).count() as u64)
        })
        .collect::<Result<Vec<u64>>>()?
        .iter()
        .sum();
    Ok(Outcome::new(
        l1 < 0.05 && violations == 0 && n >= samples,
        format!("L1 distance {l1:.4} over {n} samples, confinement violations {violations}"),
    )
    .metric("l1", l1)
    .metric("violations", violations as f64))
}

fn a13(c: &AcceptConfig) -> Result<Outcome> {
    let mut out = Outcome::new(true, "");
    let mut worst = f64::NEG_INFINITY;
    let mut k_i = 0;
    for t in [1.0, 2.0] {
        for delta in [0.1, 0.3] {
            for k in [0.2, 0.5] {
                let e = occupation_tail(t, delta, k, c.dt(1e-3), c.n(20_000, 4_000), c.seed ^ (1300 + k_i))?;
                k_i += 1;
                let bound = occupation_bound(t, delta, k);
                let slack = e.value - 3.0 * e.std_err - bound;
                worst = worst.max(slack);
                out.pass &= slack <= 0.0;
            }
        }
    }
    out.summary = format!("8 grid points, max (estimate − 3 SE − bound) = {worst:.3}");
    Ok(out.metric("max_slack", worst))
}

fn a14(_: &AcceptConfig) -> Result<Outcome> {
    let horizons = [1e2, 1e3, 1e4];
    let bad = [
        ("badex1", builtin("badex1", &[("delta", 0.1)])?),
        ("badex2", builtin("badex2", &[])?),
        ("badex3", builtin("badex3", &[])?),
    ];
    let good = [
        ("example1", lc(1.0, 1.0)),
        ("example2", builtin("linear_power", &[("lambda", 0.0), ("beta", 0.5), ("c", 1.0)])?),
        ("example3", builtin("critical_line", &[("r", 1.0), ("L", 1.0)])?),
        ("example4", builtin("sinelog", &[("lambda", 1.0), ("L", 1.0)])?),
        ("betaex", builtin("betaex", &[("alpha", 0.5), ("beta", 0.25), ("gamma", 1.0), ("r", 0.5)])?),
        ("thirdex", builtin("thirdex", &[("alpha", 0.5), ("gamma", 1.0), ("r", 0.5)])?),
    ];
    let mut wrong = Vec::new();
    for (name, s) in &bad {
        let rep = check_usual_conditions(s, 1.0, &horizons, 0.1)?;
        if rep.c3_verdict != Verdict::Violated {
            wrong.push(format!("{name} not flagged ({:?})", rep.c3_verdict));
        }
    }
    for (name, s) in &good {
        let rep = check_usual_conditions(s, 1.0, &horizons, 0.1)?;
        if !rep.all_hold() {
            wrong.push(format!("{name} does not pass"));
        }
    }
    let summary = if wrong.is_empty() {
        "3 counterexamples flagged, 6 specs pass".to_string()
    } else {
        wrong.join("; ")
    };
    Ok(Outcome::new(wrong.is_empty(), summary).metric("mistakes", wrong.len() as f64))
}

/// Machine output of a small battery of runs, as JSON.
fn battery(c: &AcceptConfig) -> Result<String> {
    let s = lc(0.5, 1.5);
    let p = SimParams::new(1.0, c.dt(1e-3), 2.0)
        .with_seed(c.seed ^ 15)
        .with_replicates(c.n(64, 16))
        .with_weights(true)
        .with_record_grid(vec![0.0, 1.0, 2.0]);
    let trees = run_trees(&s, &p)?;
    let q: Vec<_> = (0..c.n(32, 8)).into_par_iter().map(|i| simulate_q_tree(&s, &p, i, false)).collect::<Result<_>>()?;
    let surv: Estimate = survival_importance(&s, &p.clone().with_replicates(c.n(64, 16)), 2.0)?;
    let regime = classify_regime(&s, 1.0, &[10.0, 100.0, 1000.0])?;
    let curve = RateCurve::build(&s, 1.0, &geometric_grid(0.1, 100.0, 32), 1e-9)?;
    let v = serde_json::json!({
        "trees": trees,
        "qtrees": q,
        "surv": surv,
        "regime": regime,
        "rates": curve.rate,
    });
    Ok(serde_json::to_string(&v).expect("serialisable"))
}

fn a15(c: &AcceptConfig) -> Result<Outcome> {
    let pool = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Input(format!("thread pool: {e}")))
    };
    let a = pool(1)?.install(|| battery(c))?;
    let b = pool(1)?.install(|| battery(c))?;
    let d = pool(3)?.install(|| battery(c))?;
    let same = a == b && a == d;
    Ok(Outcome::new(
        same,
        format!("three runs (1, 1 and 3 threads) of {} bytes: {}", a.len(), if same { "identical" } else { "differ" }),
    )
    .metric("bytes", a.len() as f64))
}
