//! Built-in tube families.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use super::{PathPoint, PathSpec, SpecSource, TubeProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `f = λt`, constant `L`.
    LinearConst { lambda: f64, l: f64 },
    /// `f = λt`, `L = c (t+1)^β`.
    LinearPower { lambda: f64, beta: f64, c: f64 },
    /// `f = √(2r) t`, constant `L`.
    CriticalLine { r: f64, l: f64 },
    /// `f = λ (t+1) sin(log(t+1))`, constant `L`.
    SineLog { lambda: f64, l: f64 },
    /// Gradient alternating between 0 and 1 on dyadic blocks, corners smoothed over width `eta`.
    PiecewiseGradient { l: f64, eta: f64 },
    /// `f = α + √(2r) t − α (t+1)^β`, `L = γ (t+1)^β`.
    BetaEx { alpha: f64, beta: f64, gamma: f64, r: f64 },
    /// `f = δ sin(t/δ)`, constant `L`.
    BadEx1 { delta: f64, l: f64 },
    /// `f = 0`, `L = 2 + sin((t+1)^{3/2})`.
    BadEx2,
    /// Outer tube `f = t`, `L = t + √(t+1)`, or the inner tube `f = 0`, `L = √(t+1)`.
    BadEx3 { inner: bool },
}

const FAMILIES: &[&str] = &[
    "linear_const",
    "linear_power",
    "critical_line",
    "sinelog",
    "piecewise_gradient",
    "betaex",
    "thirdex",
    "badex1",
    "badex2",
    "badex3",
];

pub fn family_names() -> &'static [&'static str] {
    FAMILIES
}

struct Params<'a> {
    family: &'a str,
    map: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn req(&self, key: &str) -> Result<f64> {
        match self.map.get(key) {
            Some(v) if v.is_finite() => Ok(*v),
            Some(v) => Err(Error::Catalog(format!("{}: parameter {key} = {v} is not finite", self.family))),
            None => Err(Error::Catalog(format!("{}: missing parameter {key}", self.family))),
        }
    }

    fn opt(&self, key: &str, default: f64) -> Result<f64> {
        if self.map.contains_key(key) {
            self.req(key)
        } else {
            Ok(default)
        }
    }

    fn positive(&self, key: &str, v: f64) -> Result<f64> {
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::Catalog(format!("{}: parameter {key} must be positive, got {v}", self.family)))
        }
    }

    fn check_known(&self, known: &[&str]) -> Result<()> {
        for k in self.map.keys() {
            if !known.contains(&k.as_str()) {
                return Err(Error::Catalog(format!(
                    "{}: unknown parameter {k} (expected one of {known:?})",
                    self.family
                )));
            }
        }
        Ok(())
    }
}

impl Family {
    pub fn from_params(name: &str, map: &BTreeMap<String, f64>) -> Result<Family> {
        let p = Params { family: name, map };
        let fam = match name {
            "linear_const" => {
                p.check_known(&["lambda", "L"])?;
                Family::LinearConst {
                    lambda: p.req("lambda")?,
                    l: p.positive("L", p.req("L")?)?,
                }
            }
            "linear_power" => {
                p.check_known(&["lambda", "beta", "c"])?;
                Family::LinearPower {
                    lambda: p.req("lambda")?,
                    beta: p.req("beta")?,
                    c: p.positive("c", p.opt("c", 1.0)?)?,
                }
            }
            "critical_line" => {
                p.check_known(&["r", "L"])?;
                Family::CriticalLine {
                    r: p.positive("r", p.req("r")?)?,
                    l: p.positive("L", p.req("L")?)?,
                }
            }
            "sinelog" => {
                p.check_known(&["lambda", "L"])?;
                Family::SineLog {
                    lambda: p.req("lambda")?,
                    l: p.positive("L", p.opt("L", 1.0)?)?,
                }
            }
            "piecewise_gradient" => {
                p.check_known(&["L", "eta"])?;
                let eta = p.positive("eta", p.opt("eta", 1e-2)?)?;
                if eta >= 2.0 {
                    return Err(Error::Catalog(format!("piecewise_gradient: eta must be below 2, got {eta}")));
                }
                Family::PiecewiseGradient {
                    l: p.positive("L", p.req("L")?)?,
                    eta,
                }
            }
            "betaex" | "thirdex" => {
                let beta = if name == "thirdex" {
                    p.check_known(&["alpha", "gamma", "r"])?;
                    1.0 / 3.0
                } else {
                    p.check_known(&["alpha", "beta", "gamma", "r"])?;
                    p.req("beta")?
                };
                if !(beta > 0.0 && beta < 1.0) {
                    return Err(Error::Catalog(format!("{name}: beta must lie in (0,1), got {beta}")));
                }
                Family::BetaEx {
                    alpha: p.req("alpha")?,
                    beta,
                    gamma: p.positive("gamma", p.req("gamma")?)?,
                    r: p.positive("r", p.req("r")?)?,
                }
            }
            "badex1" => {
                p.check_known(&["delta", "L"])?;
                Family::BadEx1 {
                    delta: p.positive("delta", p.req("delta")?)?,
                    l: p.positive("L", p.opt("L", 1.0)?)?,
                }
            }
            "badex2" => {
                p.check_known(&[])?;
                Family::BadEx2
            }
            "badex3" => {
                p.check_known(&["inner"])?;
                Family::BadEx3 {
                    inner: p.opt("inner", 0.0)? != 0.0,
                }
            }
            other => {
                return Err(Error::Catalog(format!(
                    "unknown builtin {other:?}; known families: {}",
                    FAMILIES.join(", ")
                )))
            }
        };
        Ok(fam)
    }
}

/// Build a catalogue spec by family name.
pub fn builtin(name: &str, params: &[(&str, f64)]) -> Result<PathSpec> {
    let map: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    builtin_from_map(name, &map)
}

pub(crate) fn builtin_from_map(name: &str, map: &BTreeMap<String, f64>) -> Result<PathSpec> {
    let fam = Family::from_params(name, map)?;
    let label = if map.is_empty() {
        name.to_string()
    } else {
        let args: Vec<String> = map.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{name}({})", args.join(","))
    };
    Ok(PathSpec::new(
        label,
        SpecSource::Builtin {
            family: name.to_string(),
            params: map.clone(),
        },
        Arc::new(fam),
    ))
}

#[inline]
fn smoothstep(y: f64) -> (f64, f64, f64) {
    // returns (∫₀ʸ H, H, H')
    if y <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if y >= 1.0 {
        (y - 0.5, 1.0, 0.0)
    } else {
        let y2 = y * y;
        (y2 * y - 0.5 * y2 * y2, y2 * (3.0 - 2.0 * y), 6.0 * y * (1.0 - y))
    }
}

impl Family {
    fn pg_point(l: f64, eta: f64, t: f64) -> PathPoint {
        let (mut f, mut df, mut ddf) = (0.0, 0.0, 0.0);
        let mut n = 1;
        loop {
            let c = (2.0f64).powi(n);
            if c - 0.5 * eta >= t {
                break;
            }
            let jump = if n % 2 == 1 { 1.0 } else { -1.0 };
            let (i, h, dh) = smoothstep((t - c) / eta + 0.5);
            f += jump * eta * i;
            df += jump * h;
            ddf += jump * dh / eta;
            n += 1;
        }
        PathPoint { f, df, ddf, l, dl: 0.0, ddl: 0.0 }
    }
}

impl TubeProfile for Family {
    fn point(&self, t: f64) -> PathPoint {
        match *self {
            Family::LinearConst { lambda, l } => PathPoint {
                f: lambda * t,
                df: lambda,
                ddf: 0.0,
                l,
                dl: 0.0,
                ddl: 0.0,
            },
            Family::LinearPower { lambda, beta, c } => {
                let s = t + 1.0;
                let lp = c * s.powf(beta);
                PathPoint {
                    f: lambda * t,
                    df: lambda,
                    ddf: 0.0,
                    l: lp,
                    dl: beta * lp / s,
                    ddl: beta * (beta - 1.0) * lp / (s * s),
                }
            }
            Family::CriticalLine { r, l } => {
                let v = (2.0 * r).sqrt();
                PathPoint { f: v * t, df: v, ddf: 0.0, l, dl: 0.0, ddl: 0.0 }
            }
            Family::SineLog { lambda, l } => {
                let s = t + 1.0;
                let (sn, cs) = s.ln().sin_cos();
                PathPoint {
                    f: lambda * s * sn,
                    df: lambda * (sn + cs),
                    ddf: lambda * (cs - sn) / s,
                    l,
                    dl: 0.0,
                    ddl: 0.0,
                }
            }
            Family::PiecewiseGradient { l, eta } => Family::pg_point(l, eta, t),
            Family::BetaEx { alpha, beta, gamma, r } => {
                let s = t + 1.0;
                let sb = s.powf(beta);
                let v = (2.0 * r).sqrt();
                PathPoint {
                    f: alpha + v * t - alpha * sb,
                    df: v - alpha * beta * sb / s,
                    ddf: -alpha * beta * (beta - 1.0) * sb / (s * s),
                    l: gamma * sb,
                    dl: gamma * beta * sb / s,
                    ddl: gamma * beta * (beta - 1.0) * sb / (s * s),
                }
            }
            Family::BadEx1 { delta, l } => {
                let (sn, cs) = (t / delta).sin_cos();
                PathPoint {
                    f: delta * sn,
                    df: cs,
                    ddf: -sn / delta,
                    l,
                    dl: 0.0,
                    ddl: 0.0,
                }
            }
            Family::BadEx2 => {
                let s = t + 1.0;
                let rs = s.sqrt();
                let phase = s * rs;
                let d1 = 1.5 * rs;
                let d2 = 0.75 / rs;
                let (sn, cs) = phase.sin_cos();
                PathPoint {
                    f: 0.0,
                    df: 0.0,
                    ddf: 0.0,
                    l: 2.0 + sn,
                    dl: cs * d1,
                    ddl: -sn * d1 * d1 + cs * d2,
                }
            }
            Family::BadEx3 { inner } => {
                let s = t + 1.0;
                let rs = s.sqrt();
                if inner {
                    PathPoint {
                        f: 0.0,
                        df: 0.0,
                        ddf: 0.0,
                        l: rs,
                        dl: 0.5 / rs,
                        ddl: -0.25 / (s * rs),
                    }
                } else {
                    PathPoint {
                        f: t,
                        df: 1.0,
                        ddf: 0.0,
                        l: t + rs,
                        dl: 1.0 + 0.5 / rs,
                        ddl: -0.25 / (s * rs),
                    }
                }
            }
        }
    }

    fn resolution(&self, t: f64) -> Option<f64> {
        match *self {
            Family::BadEx1 { delta, .. } => Some(delta),
            Family::BadEx2 => Some(FRAC_1_SQRT_2 / (t + 1.0).sqrt()),
            _ => None,
        }
    }

    fn breakpoints(&self, t_end: f64) -> Vec<f64> {
        match *self {
            Family::PiecewiseGradient { eta, .. } => {
                let mut out = Vec::new();
                let mut c = 2.0;
                while c - 0.5 * eta < t_end {
                    out.push(c - 0.5 * eta);
                    out.push(c);
                    if c + 0.5 * eta < t_end {
                        out.push(c + 0.5 * eta);
                    }
                    c *= 2.0;
                }
                out.retain(|&b| b > 0.0 && b < t_end);
                out
            }
            _ => Vec::new(),
        }
    }
}

/// Unsmoothed centre path of the dyadic-gradient example: `(f, f')`.
pub fn nondiff_exact(t: f64) -> (f64, f64) {
    if t < 2.0 {
        return (0.0, 0.0);
    }
    // f' = 1 on [2^{2k+1}, 2^{2k+2})
    let mut f = 0.0;
    let mut lo = 2.0;
    let mut slope = 0.0;
    while lo < t {
        let hi = 2.0 * lo;
        let odd = (lo.log2().round() as i64) % 2 == 1;
        if odd {
            f += hi.min(t) - lo;
        }
        if t < hi {
            slope = if odd { 1.0 } else { 0.0 };
        }
        lo = hi;
    }
    (f, slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::eval_path;

    #[test]
    fn linear_const_is_constant() {
        let s = builtin("linear_const", &[("lambda", 0.0), ("L", 2.0)]).unwrap();
        let p = eval_path(&s, 5.0).unwrap();
        assert_eq!((p.f, p.df, p.ddf, p.l, p.dl, p.ddl), (0.0, 0.0, 0.0, 2.0, 0.0, 0.0));
    }

    #[test]
    fn linear_const_unit_slope() {
        let s = builtin("linear_const", &[("lambda", 1.0), ("L", 2.0)]).unwrap();
        let p = s.point(3.5);
        assert_eq!(p.f, 3.5);
        assert_eq!(p.l, 2.0);
    }

    #[test]
    fn betaex_starts_at_zero() {
        let s = builtin("betaex", &[("alpha", 1.0), ("beta", 0.5), ("gamma", 1.0), ("r", 0.5)]).unwrap();
        let p = s.point(0.0);
        assert_eq!(p.f, 0.0);
        assert_eq!(p.l, 1.0);
        let t = builtin("thirdex", &[("alpha", 2.0), ("gamma", 0.7), ("r", 1.3)]).unwrap();
        assert_eq!(t.point(0.0).f, 0.0);
    }

    #[test]
    fn sinelog_initial_slope() {
        let s = builtin("sinelog", &[("lambda", 1.0), ("L", 1.0)]).unwrap();
        let p = s.point(0.0);
        assert_eq!(p.f, 0.0);
        assert!((p.df - 1.0).abs() < 1e-15);
    }

    #[test]
    fn badex1_shape() {
        let s = builtin("badex1", &[("delta", 0.1)]).unwrap();
        let t = 0.37;
        let p = s.point(t);
        assert!((p.f - 0.1 * (10.0 * t).sin()).abs() < 1e-15);
        assert_eq!(p.l, 1.0);
    }

    #[test]
    fn critical_line_unit_speed() {
        let s = builtin("critical_line", &[("r", 0.5), ("L", 1.0)]).unwrap();
        let p = s.point(4.0);
        assert!((p.f - 4.0).abs() < 1e-15);
        assert_eq!(p.l, 1.0);
    }

    #[test]
    fn unknown_and_missing_are_catalog_errors() {
        assert!(matches!(builtin("nope", &[]), Err(Error::Catalog(_))));
        assert!(matches!(builtin("linear_const", &[("lambda", 1.0)]), Err(Error::Catalog(_))));
        assert!(matches!(
            builtin("linear_const", &[("lambda", 1.0), ("L", 1.0), ("zzz", 1.0)]),
            Err(Error::Catalog(_))
        ));
        assert!(matches!(builtin("linear_const", &[("lambda", 1.0), ("L", -1.0)]), Err(Error::Catalog(_))));
    }

    #[test]
    fn test_nondiff_exact_blocks() {
        assert_eq!(nondiff_exact(1.5), (0.0, 0.0));
        assert_eq!(nondiff_exact(3.0), (1.0, 1.0));
        assert_eq!(nondiff_exact(4.0), (2.0, 0.0));
        assert_eq!(nondiff_exact(6.0), (2.0, 0.0));
        assert_eq!(nondiff_exact(10.0), (4.0, 1.0));
        assert_eq!(nondiff_exact(16.0), (10.0, 0.0));
    }

    #[test]
    fn mollified_gradient_close_to_exact() {
        let eta = 1e-2;
        let s = builtin("piecewise_gradient", &[("L", 1.0), ("eta", eta)]).unwrap();
        let mut worst: f64 = 0.0;
        let mut t = 0.0;
        while t < 300.0 {
            let (fe, _) = nondiff_exact(t);
            worst = worst.max((s.point(t).f - fe).abs());
            t += 0.0037;
        }
        // probe the corners directly too
        for n in 1..9 {
            let c = 2f64.powi(n);
            for dt in [-eta, -eta / 2.0, -eta / 4.0, 0.0, eta / 4.0, eta / 2.0, eta] {
                let (fe, _) = nondiff_exact(c + dt);
                worst = worst.max((s.point(c + dt).f - fe).abs());
            }
        }
        assert!(worst <= eta, "sup-norm gap {worst}");
        assert!(worst > 0.0);
    }

    #[test]
    fn badex3_tubes_nest() {
        let inner = builtin("badex3", &[("inner", 1.0)]).unwrap();
        let outer = builtin("badex3", &[]).unwrap();
        for &t in &[0.0, 0.5, 3.0, 100.0] {
            let (a, b) = (inner.point(t), outer.point(t));
            assert!((a.f - b.f).abs() + a.l <= b.l + 1e-12);
        }
    }
}
