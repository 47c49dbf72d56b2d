use std::f64::consts::PI;

use super::quad::Quadrature;
use crate::error::{Error, Result};
use crate::path::{eval_path, PathPoint, PathSpec};

const PI2_8: f64 = PI * PI / 8.0;

/// `r − ½f′² − π²/(8L²) + L′/(2L)` at a point already evaluated.
#[inline]
pub fn integrand_at(p: &PathPoint, r: f64) -> f64 {
    r - 0.5 * p.df * p.df - PI2_8 / (p.l * p.l) + p.dl / (2.0 * p.l)
}

pub fn growth_integrand(spec: &PathSpec, r: f64, s: f64) -> Result<f64> {
    let p = eval_path(spec, s)?;
    Ok(integrand_at(&p, r))
}

/// The r-free part of the integrand; NaN when the tube has collapsed so that
/// quadrature reports the location.
#[inline]
fn base_integrand(spec: &PathSpec, s: f64) -> f64 {
    let p = spec.point(s);
    if p.l > 0.0 {
        integrand_at(&p, 0.0)
    } else {
        f64::NAN
    }
}

/// One of the separately integrable pieces of the rate and error functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    /// `½ f′²`
    Drift,
    /// `π²/(8L²)`
    Width,
    /// `L′/(2L)`
    Stretch,
    /// `|f″| L`
    CurvatureF,
    /// `|L″| L`
    CurvatureL,
}

impl Term {
    #[inline]
    pub fn eval(self, p: &PathPoint) -> f64 {
        match self {
            Term::Drift => 0.5 * p.df * p.df,
            Term::Width => PI2_8 / (p.l * p.l),
            Term::Stretch => p.dl / (2.0 * p.l),
            Term::CurvatureF => p.ddf.abs() * p.l,
            Term::CurvatureL => p.ddl.abs() * p.l,
        }
    }
}

/// Quadrature panels for `[a, b]`: doubling times, the profile's breakpoints,
/// and subdivision down to the profile's resolution.
pub fn panel_points(spec: &PathSpec, a: f64, b: f64) -> Vec<f64> {
    let mut marks = vec![a, b];
    let mut x = 1.0;
    while x < b {
        if x > a {
            marks.push(x);
        }
        x *= 2.0;
    }
    marks.extend(spec.breakpoints(b).into_iter().filter(|&s| s > a && s < b));
    marks.sort_by(f64::total_cmp);
    marks.dedup();
    let mut out = Vec::with_capacity(marks.len());
    out.push(a);
    for w in marks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut s = lo;
        while let Some(res) = spec.resolution(s) {
            let next = s + 2.0 * res;
            if next >= hi {
                break;
            }
            out.push(next);
            s = next;
        }
        out.push(hi);
    }
    out
}

/// Relative accuracy floors of the quadratures behind `R` and `E`, measured
/// against the integral of the integrand's absolute value. Evaluator round-off
/// on fast oscillations (phases of order 10⁶ at far horizons) sits near 1e-10.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub rate_rel: f64,
    pub budget_rel: f64,
}

impl Default for Accuracy {
    fn default() -> Self {
        Accuracy {
            rate_rel: 1e-10,
            budget_rel: 1e-8,
        }
    }
}

fn integrate_fn<F: Fn(f64) -> f64>(spec: &PathSpec, f: &F, a: f64, b: f64, tol: f64, rel_tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Input(format!("quadrature tolerance must be positive, got {tol}")));
    }
    if !(a >= 0.0) || !(b >= a) || !b.is_finite() {
        return Err(Error::Input(format!("bad integration range [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let q = Quadrature {
        rel_tol,
        ..Quadrature::with_tol(tol)
    };
    Ok(q.integrate_panels(f, &panel_points(spec, a, b))?.value)
}

/// `∫ₐᵇ term(s) ds`.
pub fn integrate_term(spec: &PathSpec, term: Term, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_term_with(spec, term, a, b, tol, Accuracy::default())
}

fn integrate_term_with(spec: &PathSpec, term: Term, a: f64, b: f64, tol: f64, acc: Accuracy) -> Result<f64> {
    let f = |s: f64| {
        let p = spec.point(s);
        if p.l > 0.0 {
            term.eval(&p)
        } else {
            f64::NAN
        }
    };
    let rel = match term {
        Term::CurvatureF | Term::CurvatureL => acc.budget_rel,
        _ => acc.rate_rel,
    };
    integrate_fn(spec, &f, a, b, tol, rel)
}

/// Integral of the growth integrand between two times. The stretch term
/// `L′/2L` is taken in closed form as `½ log(L(b)/L(a))`; the rest by quadrature.
pub fn rate_increment(spec: &PathSpec, r: f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    rate_increment_with(spec, r, a, b, tol, Accuracy::default())
}

fn rate_increment_with(spec: &PathSpec, r: f64, a: f64, b: f64, tol: f64, acc: Accuracy) -> Result<f64> {
    let f = |s: f64| {
        let p = spec.point(s);
        if p.l > 0.0 {
            -0.5 * p.df * p.df - PI2_8 / (p.l * p.l)
        } else {
            f64::NAN
        }
    };
    let base = integrate_fn(spec, &f, a, b, tol, acc.rate_rel)?;
    let stretch = if a == b { 0.0 } else { 0.5 * (eval_path(spec, b)?.l / eval_path(spec, a)?.l).ln() };
    Ok(base + stretch + r * (b - a))
}

/// `R(t) = ∫₀ᵗ (r − ½f′² − π²/8L² + L′/2L) ds`.
pub fn rate_integral(spec: &PathSpec, r: f64, t: f64, tol: f64) -> Result<f64> {
    rate_increment(spec, r, 0.0, t, tol)
}

/// `½ log(L(t)/L(0))`, the closed form of the stretch term.
pub fn stretch_closed_form(spec: &PathSpec, t: f64) -> Result<f64> {
    let l0 = eval_path(spec, 0.0)?.l;
    let lt = eval_path(spec, t)?.l;
    Ok(0.5 * (lt / l0).ln())
}

/// The four pieces of `E(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BudgetParts {
    /// `|f′(t)| L(t)`
    pub slope: f64,
    /// `∫₀ᵗ |f″| L`
    pub curvature_f: f64,
    /// `½ |L′(t)| L(t)`
    pub stretch: f64,
    /// `½ ∫₀ᵗ |L″| L`
    pub curvature_l: f64,
}

impl BudgetParts {
    pub fn total(&self) -> f64 {
        self.slope + self.curvature_f + self.stretch + self.curvature_l
    }

    fn assemble(p: &PathPoint, int_f: f64, int_l: f64) -> Self {
        Self {
            slope: p.df.abs() * p.l,
            curvature_f: int_f,
            stretch: 0.5 * p.dl.abs() * p.l,
            curvature_l: 0.5 * int_l,
        }
    }
}

pub fn error_budget_parts(spec: &PathSpec, t: f64, tol: f64) -> Result<BudgetParts> {
    let p = eval_path(spec, t)?;
    let int_f = integrate_term(spec, Term::CurvatureF, 0.0, t, tol)?;
    let int_l = integrate_term(spec, Term::CurvatureL, 0.0, t, tol)?;
    Ok(BudgetParts::assemble(&p, int_f, int_l))
}

/// `E(t) = |f′(t)|L(t) + ∫₀ᵗ|f″|L + ½|L′(t)|L(t) + ½∫₀ᵗ|L″|L`.
pub fn error_budget(spec: &PathSpec, t: f64, tol: f64) -> Result<f64> {
    Ok(error_budget_parts(spec, t, tol)?.total())
}

/// `R`, `E` and the running infimum of `R` sampled on a grid.
#[derive(Debug, Clone)]
pub struct RateCurve {
    pub grid: Vec<f64>,
    pub rate: Vec<f64>,
    pub budget: Vec<f64>,
    pub runinf: Vec<f64>,
    /// Cumulative `∫|f″|L` on the grid.
    pub curvature_f: Vec<f64>,
    /// Cumulative `∫|L″|L` on the grid.
    pub curvature_l: Vec<f64>,
    pub r: f64,
    pub spec_name: String,
    pub tol: f64,
    pub accuracy: Accuracy,
    spec: PathSpec,
}

impl RateCurve {
    /// Integrates cell by cell; `tol` bounds the accumulated error at the last grid point.
    pub fn build(spec: &PathSpec, r: f64, grid: &[f64], tol: f64) -> Result<RateCurve> {
        RateCurve::build_with(spec, r, grid, tol, Accuracy::default())
    }

    pub fn build_with(spec: &PathSpec, r: f64, grid: &[f64], tol: f64, accuracy: Accuracy) -> Result<RateCurve> {
        validate_grid(grid)?;
        let t_max = *grid.last().unwrap();
        let n = grid.len();
        let mut curve = RateCurve {
            grid: grid.to_vec(),
            rate: Vec::with_capacity(n),
            budget: Vec::with_capacity(n),
            runinf: Vec::new(),
            curvature_f: Vec::with_capacity(n),
            curvature_l: Vec::with_capacity(n),
            r,
            spec_name: spec.name().to_string(),
            tol,
            accuracy,
            spec: spec.clone(),
        };
        let (mut prev, mut acc_r, mut acc_f, mut acc_l) = (0.0, 0.0, 0.0, 0.0);
        for &t in grid {
            let cell_tol = if t_max > 0.0 { (tol * (t - prev) / t_max).max(tol * 1e-6) } else { tol };
            acc_r += rate_increment_with(spec, r, prev, t, cell_tol, accuracy)?;
            acc_f += integrate_term_with(spec, Term::CurvatureF, prev, t, cell_tol, accuracy)?;
            acc_l += integrate_term_with(spec, Term::CurvatureL, prev, t, cell_tol, accuracy)?;
            let p = eval_path(spec, t)?;
            curve.rate.push(acc_r);
            curve.curvature_f.push(acc_f);
            curve.curvature_l.push(acc_l);
            curve.budget.push(BudgetParts::assemble(&p, acc_f, acc_l).total());
            prev = t;
        }
        curve.runinf = running_inf(&curve)?;
        Ok(curve)
    }

    pub fn spec(&self) -> &PathSpec {
        &self.spec
    }

    pub fn ratio(&self, i: usize) -> f64 {
        let t = self.grid[i];
        if t > 0.0 {
            self.rate[i] / t
        } else {
            growth_integrand(&self.spec, self.r, 0.0).unwrap_or(f64::NAN)
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Input("time grid is empty".into()));
    }
    if !(grid[0] >= 0.0) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Input("time grid must be finite and non-negative".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` points `t_max·k/n`, k = 1..n, preceded by 0.
pub fn linear_grid(t_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
}

/// `n` geometrically spaced points from `t_min` to `t_max` inclusive.
pub fn geometric_grid(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let ratio = (t_max / t_min).ln() / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|k| t_min * (ratio * k as f64).exp()).collect();
    g[n - 1] = t_max;
    g
}

/// Prefix minimum of `R` over `[0, t_i]`, including `R(0) = 0` and interior
/// minima where the integrand changes sign from negative to positive.
///
/// Each cell is scanned for sign changes on sub-steps of a quarter of the
/// spec's resolution (an eighth of the cell when it has none) and at its
/// breakpoints, so oscillations faster than the grid are not missed.
pub fn running_inf(curve: &RateCurve) -> Result<Vec<f64>> {
    let spec = &curve.spec;
    let r = curve.r;
    let g = |s: f64| base_integrand(spec, s) + r;
    let t_end = curve.grid.last().copied().unwrap_or(0.0);
    let breaks = spec.breakpoints(t_end);
    let mut out = Vec::with_capacity(curve.len());
    let (mut best, mut prev_t, mut prev_r) = (0.0f64, 0.0, 0.0);
    for (i, &t) in curve.grid.iter().enumerate() {
        if t > prev_t {
            let mut pts = vec![prev_t];
            let mut s = prev_t;
            while s < t {
                let h = spec.resolution(s).map_or((t - prev_t) / 8.0, |res| 0.25 * res).max(1e-9 * t);
                s = (s + h).min(t);
                pts.push(s);
            }
            pts.extend(breaks.iter().copied().filter(|&b| b > prev_t && b < t));
            pts.sort_by(f64::total_cmp);
            // Walk the cell from root to root; `anchor` is where `R` is known.
            let (mut anchor, mut r_anchor) = (prev_t, prev_r);
            let mut g_a = g(pts[0]);
            for w in pts.windows(2) {
                let g_b = g(w[1]);
                if g_a < 0.0 && g_b > 0.0 {
                    let root = illinois(&g, w[0], w[1], g_a, g_b);
                    let tol = (curve.tol * (root - anchor) / t_end).max(curve.tol * 1e-6);
                    r_anchor += rate_increment_with(spec, r, anchor, root, tol, curve.accuracy)?;
                    anchor = root;
                    best = best.min(r_anchor);
                }
                g_a = g_b;
            }
        }
        best = best.min(curve.rate[i]);
        out.push(best);
        prev_t = t;
        prev_r = curve.rate[i];
    }
    Ok(out)
}

/// Regula falsi with the Illinois modification on a bracketing interval.
fn illinois<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) || (b - a) <= 1e-15 * b.abs().max(1.0) {
            return 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

/// Bracket of the liminf of `R(t)/t`: min and max over the last half of the horizons.
pub fn estimate_s(spec: &PathSpec, r: f64, horizons: &[f64]) -> Result<(f64, f64)> {
    if horizons.len() < 2 {
        return Err(Error::Input("estimate_S needs at least two horizons".into()));
    }
    if horizons[0] <= 0.0 {
        return Err(Error::Input("horizons must be positive".into()));
    }
    let curve = RateCurve::build(spec, r, horizons, 1e-9)?;
    Ok(tail_bracket(&curve))
}

pub(crate) fn tail_bracket(curve: &RateCurve) -> (f64, f64) {
    let n = curve.len();
    let start = n - n.div_ceil(2);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in start..n {
        let v = curve.ratio(i);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Growth-rate bracket `(R_inner(t), R_outer(t))` for path sets squeezed between two tubes.
pub fn bracket_set(inner: &PathSpec, outer: &PathSpec, r: f64, t: f64) -> Result<(f64, f64)> {
    check_containment(inner, outer, t, 1000)?;
    let lo = rate_integral(inner, r, t, 1e-9)?;
    let hi = rate_integral(outer, r, t, 1e-9)?;
    Ok((lo, hi))
}

/// Pointwise containment `|f_in − f_out| + L_in ≤ L_out` on a uniform probe grid.
pub fn check_containment(inner: &PathSpec, outer: &PathSpec, t: f64, probes: usize) -> Result<()> {
    let probes = probes.max(1);
    for k in 0..=probes {
        let s = t * k as f64 / probes as f64;
        let pi = eval_path(inner, s)?;
        let po = eval_path(outer, s)?;
        let slack = 1e-12 * po.l.max(1.0);
        if (pi.f - po.f).abs() + pi.l > po.l + slack {
            return Err(Error::Containment { t: s });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::builtin;

    fn lc(lambda: f64, l: f64) -> PathSpec {
        builtin("linear_const", &[("lambda", lambda), ("L", l)]).unwrap()
    }

    #[test]
    fn integrand_examples() {
        let s = lc(0.0, PI / 2.0);
        assert!((growth_integrand(&s, 1.0, 3.7).unwrap() - 0.5).abs() < 1e-15);
        let c = builtin("critical_line", &[("r", 0.5), ("L", 1.0)]).unwrap();
        assert!((growth_integrand(&c, 0.5, 0.0).unwrap() + PI2_8).abs() < 1e-15);
        let s = lc(1.5, 2.0);
        let want = 0.7 - 1.125 - PI2_8 / 4.0;
        assert!((growth_integrand(&s, 0.7, 9.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn integral_examples() {
        let s = lc(0.0, PI / 2.0);
        assert!((rate_integral(&s, 1.0, 10.0, 1e-9).unwrap() - 5.0).abs() < 1e-9);
        assert_eq!(rate_integral(&s, 1.0, 0.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn budget_examples() {
        let s = lc(1.3, 2.0);
        for t in [0.0, 1.0, 50.0] {
            assert!((error_budget(&s, t, 1e-9).unwrap() - 2.6).abs() < 1e-12);
        }
        assert_eq!(error_budget(&lc(0.0, 3.0), 10.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn betaex_budget_tracks_leading_term() {
        let (a, b, g, r) = (1.0, 0.5, 1.0, 0.5);
        let s = builtin("betaex", &[("alpha", a), ("beta", b), ("gamma", g), ("r", r)]).unwrap();
        let t = 1e4;
        let e = error_budget(&s, t, 1e-9).unwrap();
        let lead = g * (2.0 * r).sqrt() * (t + 1.0).powf(b);
        assert!(((e - lead) / lead).abs() < 0.1, "{e} vs {lead}");
    }

    #[test]
    fn nested_constant_tubes() {
        let inner = lc(0.0, 1.0);
        let outer = lc(0.0, 2.0);
        let (lo, hi) = bracket_set(&inner, &outer, 1.0, 3.0).unwrap();
        assert!((lo - 3.0 * (1.0 - PI2_8)).abs() < 1e-9);
        assert!((hi - 3.0 * (1.0 - PI2_8 / 4.0)).abs() < 1e-9);
        let (a, b) = bracket_set(&inner, &inner, 1.0, 3.0).unwrap();
        assert_eq!(a, b);
        assert!(matches!(bracket_set(&outer, &inner, 1.0, 3.0), Err(Error::Containment { t }) if t == 0.0));
    }

    #[test]
    fn runinf_monotone_cases() {
        let up = lc(0.0, 4.0);
        let g = linear_grid(10.0, 20);
        let c = RateCurve::build(&up, 1.0, &g, 1e-9).unwrap();
        assert!(c.runinf.iter().all(|&v| v == 0.0));
        let down = lc(0.0, 0.5);
        let c = RateCurve::build(&down, 1.0, &g, 1e-9).unwrap();
        for (a, b) in c.runinf.iter().zip(&c.rate) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bracket_constant_cases() {
        let s = lc(0.0, PI / 2.0);
        let (lo, hi) = estimate_s(&s, 1.0, &[10.0, 100.0, 1000.0]).unwrap();
        assert!((lo - 0.5).abs() < 1e-10 && (hi - 0.5).abs() < 1e-10);
        let c = builtin("critical_line", &[("r", 0.5), ("L", 1.0)]).unwrap();
        let (lo, hi) = estimate_s(&c, 0.5, &[10.0, 100.0, 1000.0]).unwrap();
        assert!((lo + PI2_8).abs() < 1e-10 && (hi + PI2_8).abs() < 1e-10);
        assert!(estimate_s(&s, 1.0, &[10.0]).is_err());
    }

    #[test]
    fn grids() {
        let g = geometric_grid(1.0, 1000.0, 4);
        assert!((g[1] - 10.0).abs() < 1e-9 && g[3] == 1000.0);
        assert_eq!(linear_grid(2.0, 4), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(RateCurve::build(&lc(0.0, 1.0), 1.0, &[1.0, 1.0], 1e-9).is_err());
    }
}
