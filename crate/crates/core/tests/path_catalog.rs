use proptest::prelude::*;
use tubebbm::path::{builtin, check_usual_conditions, family_names, nondiff_exact, PathSpec, Verdict};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn sample_specs() -> Vec<PathSpec> {
    vec![
        builtin("linear_const", &[("lambda", 0.7), ("L", 1.5)]).unwrap(),
        builtin("linear_power", &[("lambda", 0.3), ("beta", 0.5), ("c", 2.0)]).unwrap(),
        builtin("critical_line", &[("r", 0.8), ("L", 1.0)]).unwrap(),
        builtin("sinelog", &[("lambda", 1.2), ("L", 1.0)]).unwrap(),
        builtin("piecewise_gradient", &[("L", 1.0), ("eta", 0.05)]).unwrap(),
        builtin("betaex", &[("alpha", 0.5), ("beta", 0.3), ("gamma", 1.5), ("r", 0.7)]).unwrap(),
        builtin("thirdex", &[("alpha", 0.2), ("gamma", 2.0), ("r", 0.5)]).unwrap(),
        builtin("badex1", &[("delta", 0.3)]).unwrap(),
        builtin("badex2", &[]).unwrap(),
        builtin("badex3", &[]).unwrap(),
        builtin("badex3", &[("inner", 1.0)]).unwrap(),
    ]
}

#[test]
fn every_family_is_sampled() {
    let sampled: Vec<String> = sample_specs()
        .iter()
        .map(|s| match s.source() {
            tubebbm::path::SpecSource::Builtin { family, .. } => family.clone(),
            _ => unreachable!(),
        })
        .collect();
    for f in family_names() {
        assert!(sampled.iter().any(|s| s == f), "{f} has no sample");
    }
}

#[test]
fn constant_tube_point() {
    let p = builtin("linear_const", &[("lambda", 0.0), ("L", 2.0)]).unwrap().point(5.0);
    assert_eq!([p.f, p.df, p.ddf, p.l, p.dl, p.ddl], [0.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
}

#[test]
fn betaex_origin() {
    let p = builtin("betaex", &[("alpha", 1.0), ("beta", 0.5), ("gamma", 1.0), ("r", 0.5)])
        .unwrap()
        .point(0.0);
    assert_eq!(p.f, 0.0);
    assert!(close(p.l, 1.0, 1e-15));
}

#[test]
fn sinelog_matches_closed_form() {
    let lambda = 1.3;
    let s = builtin("sinelog", &[("lambda", lambda), ("L", 1.0)]).unwrap();
    let p0 = s.point(0.0);
    assert_eq!(p0.f, 0.0);
    assert!(close(p0.df, lambda, 1e-15));
    for t in [0.5, 3.0, 40.0, 1e4] {
        let u = f64::ln(t + 1.0);
        let p = s.point(t);
        assert!(close(p.f, lambda * (t + 1.0) * u.sin(), 1e-12 * (t + 1.0)));
        assert!(close(p.df, lambda * (u.sin() + u.cos()), 1e-12));
        assert!(close(p.ddf, lambda * (u.cos() - u.sin()) / (t + 1.0), 1e-12));
    }
}

#[test]
fn catalog_shapes() {
    let a = builtin("linear_const", &[("lambda", 1.0), ("L", 2.0)]).unwrap();
    let b = builtin("badex1", &[("delta", 0.1)]).unwrap();
    let c = builtin("critical_line", &[("r", 0.5), ("L", 1.0)]).unwrap();
    for t in [0.0, 0.3, 2.0, 17.0] {
        let p = a.point(t);
        assert!(close(p.f, t, 1e-14) && p.l == 2.0);
        let p = b.point(t);
        assert!(close(p.f, 0.1 * (10.0 * t).sin(), 1e-14) && p.l == 1.0);
        let p = c.point(t);
        assert!(close(p.f, t, 1e-14) && p.l == 1.0);
    }
}

#[test]
fn usual_conditions_examples() {
    let horizons = [1e2, 1e3, 1e4];
    let r = 1.0;
    let rep = check_usual_conditions(&builtin("linear_const", &[("lambda", 0.0), ("L", 2.0)]).unwrap(), r, &horizons, 0.1).unwrap();
    assert_eq!(rep.c3_verdict, Verdict::Holds);
    let s = r - std::f64::consts::PI.powi(2) / 32.0;
    assert!(close(rep.s_bracket.0, s, 1e-9) && close(rep.s_bracket.1, s, 1e-9));
    for spec in [builtin("badex3", &[]).unwrap(), builtin("badex1", &[("delta", 0.1), ("L", 1.0)]).unwrap()] {
        let rep = check_usual_conditions(&spec, r, &horizons, 0.1).unwrap();
        assert_eq!(rep.c3_verdict, Verdict::Violated, "{}", spec.name());
        assert!(rep.s_bracket.0 <= rep.s_bracket.1);
    }
}

#[test]
fn mollified_gradient_stays_near_exact_path() {
    for eta in [1e-2, 0.1] {
        let s = builtin("piecewise_gradient", &[("L", 1.0), ("eta", eta)]).unwrap();
        let n = 200_000;
        let worst = (0..=n)
            .map(|k| {
                let t = 4096.0 * k as f64 / n as f64;
                (s.point(t).f - nondiff_exact(t).0).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= eta, "eta={eta}: sup distance {worst}");
    }
}

type Component<'a> = Box<dyn Fn(f64) -> f64 + 'a>;

/// Ratio of central-difference errors at steps `h` and `h/2`, with a floor
/// for round-off; a correct derivative gives about 1/4.
fn fd_rate(g: impl Fn(f64) -> f64, d: f64, t: f64, h: f64) -> Option<f64> {
    let e = |h: f64| ((g(t + h) - g(t - h)) / (2.0 * h) - d).abs();
    let floor = 1e-9 * (1.0 + g(t).abs() + d.abs()) / h.min(1.0);
    let (e1, e2) = (e(h), e(0.5 * h));
    (e1 > 100.0 * floor).then(|| e2 / e1).or_else(|| (e2 > 100.0 * floor).then_some(f64::INFINITY))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_are_consistent(idx in 0usize..11, t in 0.05f64..60.0) {
        let spec = &sample_specs()[idx];
        let mut h = 1e-2 * t.max(1.0);
        if let Some(res) = spec.resolution(t) {
            h = h.min(0.05 * res);
        }
        let near_break = spec.breakpoints(t + 1.0).iter().any(|&b| (b - t).abs() < 4.0 * h);
        prop_assume!(t > 2.0 * h && !near_break);
        let p = spec.point(t);
        let at = |s: f64| spec.point(s);
        let pairs: [(&str, Component<'_>, f64); 4] = [
            ("f", Box::new(move |s| at(s).f), p.df),
            ("df", Box::new(move |s| at(s).df), p.ddf),
            ("L", Box::new(move |s| at(s).l), p.dl),
            ("dL", Box::new(move |s| at(s).dl), p.ddl),
        ];
        for (name, g, d) in pairs.iter() {
            if let Some(ratio) = fd_rate(g, *d, t, h) {
                prop_assert!(ratio < 0.35, "{} {name} at t={t}: error ratio {ratio}", spec.name());
            }
        }
    }

    #[test]
    fn critical_families_start_at_origin(
        alpha in -3.0f64..3.0,
        beta in 0.05f64..0.95,
        gamma in 0.1f64..5.0,
        r in 0.01f64..4.0,
    ) {
        let b = builtin("betaex", &[("alpha", alpha), ("beta", beta), ("gamma", gamma), ("r", r)]).unwrap();
        prop_assert_eq!(b.point(0.0).f, 0.0);
        let c = builtin("thirdex", &[("alpha", alpha), ("gamma", gamma), ("r", r)]).unwrap();
        prop_assert_eq!(c.point(0.0).f, 0.0);
    }

    #[test]
    fn half_width_positive(idx in 0usize..11, t in 0.0f64..1e4) {
        prop_assert!(sample_specs()[idx].point(t).l > 0.0);
    }
}
