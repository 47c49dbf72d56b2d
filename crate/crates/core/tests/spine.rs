use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use proptest::prelude::*;
use rayon::prelude::*;
use tubebbm::estimators::survival_importance;
use tubebbm::path::{builtin, PathSpec};
use tubebbm::sim::{survival_direct, SimParams};
use tubebbm::spine::{
    decomposition_bound, generator_fd_residual, generator_terms, gineq_bounds, simulate_q_tree, simulate_spine,
    spine_decomposition_rhs, spine_drift, spine_occupation, zeta,
};
use tubebbm::stats::mean_se;

fn lc(lambda: f64, l: f64) -> PathSpec {
    builtin("linear_const", &[("lambda", lambda), ("L", l)]).unwrap()
}

/// `ζ(t)` for `f = λt`, constant `L`, at centred position `y`.
fn zeta_linear(lambda: f64, l: f64, t: f64, y: f64) -> f64 {
    (lambda * y + (lambda * lambda / 2.0 + PI * PI / (8.0 * l * l)) * t).exp() * (PI * y / (2.0 * l)).cos()
}

#[test]
fn drift_examples() {
    let s = lc(0.0, 1.0);
    assert!((spine_drift(&s, 2.0, 0.5).unwrap() + FRAC_PI_2).abs() < 1e-14);
    let m = lc(0.7, 2.0);
    assert!((spine_drift(&m, 3.0, 2.1).unwrap() - 0.7).abs() < 1e-15);
}

#[test]
fn birth_counts_are_poisson() {
    let (r, t) = (1.5, 1.0);
    let p = SimParams::new(r, 1e-2, t).with_seed(21).with_record_grid(vec![0.0, t]);
    let s = lc(0.0, 1.0);
    let n: Vec<f64> = (0..3000u64)
        .into_par_iter()
        .map(|i| simulate_spine(&s, &p, i, false).unwrap().generation() as f64)
        .collect();
    let (m, se) = mean_se(&n);
    assert!((m - 2.0 * r * t).abs() <= 3.0 * se, "{m} ± {se}");
    let var = n.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n.len() - 1) as f64;
    assert!((var / m - 1.0).abs() < 0.1, "variance {var} vs mean {m}");
}

#[test]
fn zero_horizon_spine() {
    let mut p = SimParams::new(1.0, 1e-3, 0.0);
    p.x0 = 0.25;
    let run = simulate_spine(&lc(0.0, 1.0), &p, 0, true).unwrap();
    assert_eq!(run.path.len(), 1);
    assert_eq!((run.path[0].t, run.path[0].y), (0.0, 0.25));
    assert!(run.births.is_empty());
}

#[test]
fn spine_is_confined_and_weighted_correctly() {
    let (lambda, l, r) = (0.8, 0.7, 1.2);
    let s = lc(lambda, l);
    let p = SimParams::new(r, 1e-3, 2.0).with_seed(22).with_record_grid(vec![0.0, 0.5, 1.0, 2.0]);
    for i in 0..20 {
        let run = simulate_spine(&s, &p, i, true).unwrap();
        assert_eq!(run.zeta_series.len(), run.path.len());
        for (node, &(t, z)) in run.path.iter().zip(&run.zeta_series) {
            let y = node.y - lambda * node.t;
            assert!(y.abs() < l);
            assert!(z > 0.0);
            let want = zeta_linear(lambda, l, t, y);
            assert!((z / want - 1.0).abs() < 1e-9, "t={t}: {z} vs {want}");
        }
        for (k, &t) in run.record_times.iter().enumerate() {
            let births = run.births.iter().filter(|b| b.t <= t).count() as f64;
            let node = run.interpolate(t).unwrap();
            let w = zeta_linear(lambda, l, t, node.y - lambda * t) * (-r * t).exp();
            assert!((run.spine_weight[k] / w - 1.0).abs() < 1e-9);
            assert!((run.log_tilde_weight(k) - (births * LN_2 + w.ln())).abs() < 1e-9);
        }
    }
}

#[test]
fn zeta_of_given_paths() {
    let (lambda, l) = (0.5, 1.0);
    let s = lc(lambda, l);
    assert_eq!(zeta(&s, &[(0.0, 0.0), (1.0, 0.3)], 0.0).unwrap(), 1.0);
    let path: Vec<(f64, f64)> = (0..=100).map(|k| {
        let t = k as f64 * 0.01;
        (t, lambda * t + 0.3 * (5.0 * t).sin())
    }).collect();
    let z = zeta(&s, &path, 1.0).unwrap();
    let want = zeta_linear(lambda, l, 1.0, 0.3 * 5f64.sin());
    assert!((z / want - 1.0).abs() < 1e-9, "{z} vs {want}");
    let mut out = path.clone();
    out[50].1 += 2.0;
    assert_eq!(zeta(&s, &out, 1.0).unwrap(), 0.0);
}

#[test]
fn envelope_examples() {
    let k = PI * PI / 8.0;
    let (lo, hi) = gineq_bounds(&lc(0.0, 2.0), 3.0, 0.0).unwrap();
    assert!((lo - 3.0 * k / 4.0).abs() < 1e-9 && (hi - lo).abs() < 1e-12);
    let (lambda, l, t) = (1.5, 0.8, 2.5);
    let (lo, hi) = gineq_bounds(&lc(lambda, l), t, 0.0).unwrap();
    let centre = (lambda * lambda / 2.0 + k / (l * l)) * t;
    assert!((0.5 * (lo + hi) - centre).abs() < 1e-9);
    assert!((0.5 * (hi - lo) - lambda * l).abs() < 1e-9);
}

#[test]
fn q_trees_start_at_one_and_respect_the_bound() {
    let (r, t) = (1.0, 1.5);
    let s = builtin("sinelog", &[("lambda", 0.5), ("L", 1.0)]).unwrap();
    let p = SimParams::new(r, 1e-3, t).with_seed(23).with_record_grid(vec![0.0, 0.5, 1.0, 1.5]);
    let bound = decomposition_bound(&s, r, t, 0.0, 2000).unwrap();
    for i in 0..20 {
        let run = simulate_q_tree(&s, &p, i, true).unwrap();
        let z = run.z_series.as_ref().unwrap();
        assert_eq!(z[0].1, 1.0);
        assert_eq!(run.subtrees.as_ref().unwrap().len(), run.generation());
        assert!(run.births.iter().all(|b| b.t <= t));
        for &(_, v) in &spine_decomposition_rhs(&run).unwrap() {
            assert!(v <= bound, "{v} > {bound}");
        }
    }
}

#[test]
fn importance_agrees_with_direct_survival() {
    let s = lc(0.0, 1.0);
    let (r, t) = (0.2, 3.0);
    let d = survival_direct(&s, &SimParams::new(r, 1e-3, t).with_seed(24).with_replicates(20_000), t).unwrap();
    let i = survival_importance(&s, &SimParams::new(r, 1e-3, t).with_seed(25).with_replicates(2000), t).unwrap();
    assert!(d.z_against(&i).abs() <= 3.0, "{} ± {} vs {} ± {}", d.value, d.std_err, i.value, i.std_err);
    assert!(i.value > 0.0 && i.value <= 1.0);
    assert!(i.std_err < d.std_err);
}

#[test]
fn coarse_long_spine_keeps_the_ground_state() {
    // A long coarse run gets within 1e-5 of the wall, where fixed-depth refinement gave up.
    let s = lc(0.0, 1.0);
    let (dt, n, stride) = (0.04, 100_000usize, 5);
    let p = SimParams::new(0.0, dt, 10.0 + (n * stride) as f64 * dt).with_seed(20240101 ^ 12);
    let hist = spine_occupation(&s, &p, 0, 10.0, stride, 20).unwrap();
    let total: u64 = hist.iter().sum();
    let cdf = |y: f64| 0.5 * (y + 1.0) + (PI * y).sin() / (2.0 * PI);
    let l1: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| (h as f64 / total as f64 - (cdf(-1.0 + 0.1 * (i + 1) as f64) - cdf(-1.0 + 0.1 * i as f64))).abs())
        .sum();
    assert!(l1 < 0.05, "L1 {l1}");
}

fn smooth_specs() -> Vec<PathSpec> {
    vec![
        lc(0.6, 1.3),
        builtin("linear_power", &[("lambda", 0.3), ("beta", 0.5), ("c", 1.0)]).unwrap(),
        builtin("sinelog", &[("lambda", 1.0), ("L", 1.0)]).unwrap(),
        builtin("betaex", &[("alpha", 0.5), ("beta", 0.25), ("gamma", 1.0), ("r", 0.5)]).unwrap(),
        builtin("badex2", &[]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drift_is_odd_about_the_centre(lambda in -3.0f64..3.0, l in 0.1f64..5.0, u in 0.0f64..0.999, t in 0.0f64..10.0) {
        let s = lc(lambda, l);
        let c = u * l;
        let a = spine_drift(&s, t, lambda * t + c).unwrap() - lambda;
        let b = spine_drift(&s, t, lambda * t - c).unwrap() - lambda;
        prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn generator_terms_cancel(idx in 0usize..5, t in 0.0f64..50.0, u in -0.99f64..0.99) {
        let s = &smooth_specs()[idx];
        let y = u * s.point(t).l;
        let (dt, dy) = generator_terms(s, t, y).unwrap();
        let scale: f64 = dt.iter().map(|v| v.abs()).sum();
        prop_assert!(dt.iter().sum::<f64>().abs() <= 1e-13 * scale.max(1.0));
        prop_assert!(dy.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn generator_vanishes_by_finite_differences(idx in 0usize..5, t in 0.5f64..20.0, u in -0.8f64..0.8) {
        let s = &smooth_specs()[idx];
        let y = u * s.point(t).l;
        let res = generator_fd_residual(s, t, y, 1e-4).unwrap();
        prop_assert!(res.abs() < 1e-4, "{} t={t} y={y}: {res}", s.name());
    }
}
