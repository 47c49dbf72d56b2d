use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;
use tubebbm::path::{builtin, PathSpec};
use tubebbm::rates::{
    bracket_set, critical_predictions, error_budget, estimate_s, geometric_grid, growth_integrand, integrate_term,
    linear_grid, rate_increment, rate_integral, CriticalFamily, CriticalRegime, RateCurve, Term,
};
use tubebbm::Error;

fn lc(lambda: f64, l: f64) -> PathSpec {
    builtin("linear_const", &[("lambda", lambda), ("L", l)]).unwrap()
}

fn catalog() -> Vec<PathSpec> {
    vec![
        lc(0.4, 1.2),
        builtin("linear_power", &[("lambda", 0.2), ("beta", 0.5), ("c", 1.0)]).unwrap(),
        builtin("critical_line", &[("r", 0.5), ("L", 2.0)]).unwrap(),
        builtin("sinelog", &[("lambda", 1.0), ("L", 1.0)]).unwrap(),
        builtin("piecewise_gradient", &[("L", 1.5), ("eta", 0.05)]).unwrap(),
        builtin("betaex", &[("alpha", 0.5), ("beta", 0.25), ("gamma", 1.0), ("r", 0.5)]).unwrap(),
        builtin("thirdex", &[("alpha", 0.5), ("gamma", 1.0), ("r", 0.5)]).unwrap(),
        builtin("badex1", &[("delta", 0.2)]).unwrap(),
        builtin("badex2", &[]).unwrap(),
        builtin("badex3", &[]).unwrap(),
    ]
}

#[test]
fn integrand_examples() {
    assert!((growth_integrand(&lc(0.0, PI / 2.0), 1.0, 3.7).unwrap() - 0.5).abs() < 1e-15);
    let (lambda, l, r) = (0.8, 1.3, 2.0);
    let want = r - lambda * lambda / 2.0 - PI * PI / (8.0 * l * l);
    assert!((growth_integrand(&lc(lambda, l), r, 9.0).unwrap() - want).abs() < 1e-14);
    let c = builtin("critical_line", &[("r", 0.5), ("L", 1.0)]).unwrap();
    assert!((growth_integrand(&c, 0.5, 0.0).unwrap() + PI * PI / 8.0).abs() < 1e-15);
}

#[test]
fn integral_examples() {
    let s = lc(0.0, PI / 2.0);
    assert!((rate_integral(&s, 1.0, 10.0, 1e-9).unwrap() - 5.0).abs() < 1e-9);
    for spec in catalog() {
        assert_eq!(rate_integral(&spec, 1.0, 0.0, 1e-9).unwrap(), 0.0);
    }
}

#[test]
fn budget_examples() {
    for &(lambda, l) in &[(0.0, 1.0), (1.5, 0.5), (-2.0, 3.0)] {
        for t in [0.5, 10.0, 1e3] {
            let e = error_budget(&lc(lambda, l), t, 1e-10).unwrap();
            assert!((e - f64::abs(lambda) * l).abs() < 1e-12, "{lambda} {l} {t}: {e}");
        }
    }
    assert_eq!(error_budget(&lc(0.0, 4.0), 7.0, 1e-10).unwrap(), 0.0);
}

#[test]
fn runinf_of_monotone_curves() {
    let up = RateCurve::build(&lc(0.0, 3.0), 1.0, &linear_grid(50.0, 100), 1e-9).unwrap();
    assert!(up.runinf.iter().all(|&v| v == 0.0));
    let down = RateCurve::build(&lc(0.0, 1.0), 0.2, &linear_grid(50.0, 100), 1e-9).unwrap();
    for (a, b) in down.runinf.iter().zip(&down.rate) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn bracket_examples() {
    let (lo, hi) = estimate_s(&lc(0.0, PI / 2.0), 1.0, &[10.0, 100.0, 1000.0]).unwrap();
    assert!((lo - 0.5).abs() < 1e-9 && (hi - 0.5).abs() < 1e-9);

    let l = 1.7;
    let c = builtin("critical_line", &[("r", 0.8), ("L", l)]).unwrap();
    let (lo, hi) = estimate_s(&c, 0.8, &[1e2, 1e3, 1e4]).unwrap();
    let want = -PI * PI / (8.0 * l * l);
    assert!((lo - want).abs() < 1e-9 && (hi - want).abs() < 1e-9);

    let (r, l) = (1.0, 1.5);
    let pg = builtin("piecewise_gradient", &[("L", l), ("eta", 1e-2)]).unwrap();
    let grid = geometric_grid(256.0, 65536.0, 400);
    let (lo, hi) = estimate_s(&pg, r, &grid).unwrap();
    let base = r - PI * PI / (8.0 * l * l);
    assert!(lo >= base - 1.0 / 3.0 - 1e-2 && hi <= base - 1.0 / 6.0 + 1e-2, "({lo}, {hi})");
    assert!(lo < hi);
}

#[test]
fn widening_tube_regains_drift_rate() {
    let (lambda, r) = (0.5, 1.0);
    let s = builtin("linear_power", &[("lambda", lambda), ("beta", 0.5), ("c", 1.0)]).unwrap();
    let target = r - lambda * lambda / 2.0;
    let gap = |hs: &[f64]| {
        let (lo, hi) = estimate_s(&s, r, hs).unwrap();
        f64::max((lo - target).abs(), (hi - target).abs())
    };
    let early = gap(&[1e2, 3e2, 1e3]);
    let late = gap(&[1e5, 3e5, 1e6]);
    assert!(late < early / 10.0 && late < 1e-3, "early {early}, late {late}");
}

#[test]
fn nested_set_brackets() {
    let r = 1.3;
    let t = 4.0;
    let (lo, hi) = bracket_set(&lc(0.0, 1.0), &lc(0.0, 2.0), r, t).unwrap();
    assert!((lo / t - (r - PI * PI / 8.0)).abs() < 1e-9);
    assert!((hi / t - (r - PI * PI / 32.0)).abs() < 1e-9);
    let s = builtin("sinelog", &[("lambda", 0.5), ("L", 1.0)]).unwrap();
    let (lo, hi) = bracket_set(&s, &s, r, 30.0).unwrap();
    assert_eq!(lo, hi);
    let inner = builtin("badex3", &[("inner", 1.0)]).unwrap();
    let outer = builtin("badex3", &[]).unwrap();
    let (lo, _) = bracket_set(&inner, &outer, r, 50.0).unwrap();
    assert!((lo - rate_integral(&inner, r, 50.0, 1e-9).unwrap()).abs() < 1e-12);
    assert!(matches!(bracket_set(&lc(0.0, 2.0), &lc(0.0, 1.0), r, t), Err(Error::Containment { .. })));
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn critical_constant_examples() {
    let rep = critical_predictions(
        CriticalFamily::BetaEx,
        &params(&[("alpha", 1.0), ("beta", 0.25), ("gamma", 1.0), ("r", 0.5)]),
    )
    .unwrap();
    let p = rep.get(CriticalRegime::SubcriticalBeta).unwrap();
    assert!((p.exponent - 0.5).abs() < 1e-15 && (p.constant + PI * PI / 4.0).abs() < 1e-14);

    let rep = critical_predictions(
        CriticalFamily::BetaEx,
        &params(&[("alpha", 1.0), ("beta", 0.5), ("gamma", 1.0), ("r", 0.5)]),
    )
    .unwrap();
    let p = rep.get(CriticalRegime::SupercriticalBeta).unwrap();
    assert!((p.exponent - 0.5).abs() < 1e-15 && (p.constant - 2.0).abs() < 1e-14);

    let rep = critical_predictions(CriticalFamily::ThirdEx, &params(&[("alpha", 1.0), ("gamma", 1.0), ("r", 0.5)])).unwrap();
    assert!((rep.gamma0.unwrap() - (3.0 * PI * PI / 8.0).cbrt()).abs() < 1e-14);
}

#[test]
fn critical_functionals_approach_predicted_limits() {
    let (t, r) = (1e7, 0.5);
    for (beta, with_budget) in [(0.25, false), (0.6, true)] {
        let kv = [("alpha", 1.0), ("beta", beta), ("gamma", 1.0), ("r", r)];
        let rep = critical_predictions(CriticalFamily::BetaEx, &params(&kv)).unwrap();
        let p = &rep.predictions[0];
        let s = builtin("betaex", &kv).unwrap();
        let mut v = rate_integral(&s, r, t, 1e-10).unwrap();
        if with_budget {
            v += error_budget(&s, t, 1e-10).unwrap();
        }
        let v = v / t.powf(p.exponent);
        assert!((v / p.constant - 1.0).abs() < 0.02, "beta={beta}: {v} vs {}", p.constant);
    }
}

/// Prefix minimum of `R` at the points of `grid`, from `R` sampled `refine`
/// times more densely, at least 100 times per resolution length when the spec
/// has one, and 20 times more densely again in cells within 1 of a breakpoint.
fn brute_prefix_min(spec: &PathSpec, r: f64, grid: &[f64], refine: usize) -> Vec<f64> {
    let breaks = spec.breakpoints(grid.last().copied().unwrap_or(0.0));
    let mut out = Vec::with_capacity(grid.len());
    let (mut t, mut acc, mut min) = (0.0, 0.0, 0.0f64);
    for &g in grid {
        let t0 = t;
        let mut n = spec.resolution(g).map_or(refine, |res| refine.max((100.0 * (g - t0) / res).ceil() as usize));
        if breaks.iter().any(|&b| b > t0 - 1.0 && b < g + 1.0) {
            n *= 20;
        }
        for k in 1..=n {
            let s = t0 + (g - t0) * k as f64 / n as f64;
            if s > t {
                acc += rate_increment(spec, r, t, s, 1e-12).unwrap();
                t = s;
                min = min.min(acc);
            }
        }
        out.push(min);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rate_is_linear_in_r(idx in 0usize..10, r in 0.0f64..5.0, t in 0.0f64..200.0) {
        let s = &catalog()[idx];
        let a = rate_integral(s, r, t, 1e-9).unwrap();
        let b = rate_integral(s, 0.0, t, 1e-9).unwrap();
        prop_assert!((a - b - r * t).abs() <= 1e-8 * (1.0 + a.abs() + b.abs()), "{} {a} {b}", s.name());
    }

    #[test]
    fn stretch_term_integrates_to_log_ratio(idx in 0usize..10, t in 0.0f64..300.0) {
        let s = &catalog()[idx];
        let q = integrate_term(s, Term::Stretch, 0.0, t, 1e-11).unwrap();
        let exact = 0.5 * (s.point(t).l / s.point(0.0).l).ln();
        prop_assert!((q - exact).abs() <= 1e-8 * (1.0 + exact.abs()), "{}: {q} vs {exact}", s.name());
    }

    #[test]
    fn runinf_matches_brute_force(idx in 0usize..10, r in 0.0f64..2.0, t_max in 5.0f64..60.0) {
        let s = &catalog()[idx];
        let grid = linear_grid(t_max, 40);
        let curve = RateCurve::build(s, r, &grid, 1e-10).unwrap();
        let coarse = brute_prefix_min(s, r, &grid, 10);
        let fine = brute_prefix_min(s, r, &grid, 200);
        for i in 0..grid.len() {
            let v = curve.runinf[i];
            prop_assert!(v <= curve.rate[i] + 1e-12);
            prop_assert!(v <= coarse[i] + 1e-8, "{} t={}: {v} above coarse {}", s.name(), grid[i], coarse[i]);
            prop_assert!((v - fine[i]).abs() <= 1e-5 * (1.0 + fine[i].abs()), "{} t={}: {v} vs {}", s.name(), grid[i], fine[i]);
        }
    }
}
