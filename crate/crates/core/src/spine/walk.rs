use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::path::{eval_path, PathPoint, PathSpec};
use crate::rng::CounterRng;
use crate::sim::engine::{exp_draw, normal};

/// Position-dependent drift of the spine under the size-biased measure.
#[inline]
pub fn drift_at(p: &PathPoint, y: f64) -> f64 {
    let c = y - p.f;
    p.df + c * p.dl / p.l - FRAC_PI_2 / p.l * (FRAC_PI_2 * c / p.l).tan()
}

/// `f′(t) + (y−f)L′/L − (π/2L) tan(π(y−f)/2L)`.
pub fn spine_drift(spec: &PathSpec, t: f64, y: f64) -> Result<f64> {
    let p = eval_path(spec, t)?;
    if (y - p.f).abs() >= p.l {
        return Err(Error::Domain(format!("spine position {y} is not inside the tube at t={t}")));
    }
    Ok(drift_at(&p, y))
}

const MAX_LEVEL: u32 = 12;
/// Deepest halving allowed by the distance-to-wall rule.
const WALL_LEVEL: u32 = 40;
const MAX_REJECTS: u32 = 30;
/// Smallest step, relative to the current time, that the wall rule may take.
const MIN_REL_STEP: f64 = 1e-12;
const NEAR_BOUNDARY: f64 = 0.9;

/// Spine state at one time: position and the two running path integrals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpineNode {
    pub t: f64,
    pub y: f64,
    pub acc_f: f64,
    pub acc_l: f64,
}

impl SpineNode {
    pub(crate) fn lerp(a: &SpineNode, b: &SpineNode, t: f64) -> SpineNode {
        let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        SpineNode {
            t,
            y: a.y + w * (b.y - a.y),
            acc_f: a.acc_f + w * (b.acc_f - a.acc_f),
            acc_l: a.acc_l + w * (b.acc_l - a.acc_l),
        }
    }
}

/// Euler–Maruyama integrator for the spine with boundary refinement.
pub(crate) struct Walker<'a> {
    pub spec: &'a PathSpec,
    pub rng: CounterRng,
    pub births: CounterRng,
    pub birth_rate: f64,
    pub next_birth: f64,
    pub rejections: u64,
    pub substeps: u64,
    pub node: SpineNode,
    pub point: PathPoint,
}

impl<'a> Walker<'a> {
    pub fn new(spec: &'a PathSpec, key: u64, birth_key: u64, birth_rate: f64, x0: f64) -> Result<Self> {
        let point = eval_path(spec, 0.0)?;
        if (x0 - point.f).abs() >= point.l {
            return Err(Error::Input(format!("spine start {x0} is outside the tube")));
        }
        let mut births = CounterRng::new(birth_key);
        let next_birth = exp_draw(&mut births, birth_rate);
        Ok(Walker {
            spec,
            rng: CounterRng::new(key),
            births,
            birth_rate,
            next_birth,
            rejections: 0,
            substeps: 0,
            node: SpineNode {
                t: 0.0,
                y: x0,
                acc_f: 0.0,
                acc_l: 0.0,
            },
            point,
        })
    }

    /// Draw the time of the birth after the current one.
    pub fn advance_birth_clock(&mut self) {
        self.next_birth += exp_draw(&mut self.births, self.birth_rate);
    }

    /// Move the spine to time `t1 > node.t`.
    pub fn advance_to(&mut self, t1: f64) -> Result<()> {
        let h = t1 - self.node.t;
        if h <= 0.0 {
            return Ok(());
        }
        let mut rejects = 0;
        self.advance(h, 0, &mut rejects, Some(t1))
    }

    fn advance(&mut self, h: f64, level: u32, rejects: &mut u32, end: Option<f64>) -> Result<()> {
        let p = self.point;
        let c = (self.node.y - p.f).abs();
        // The drift grows like 1/d at distance d from the wall, so steps need h ≲ d².
        let near = level < MAX_LEVEL && c > NEAR_BOUNDARY * p.l;
        let deep = level < WALL_LEVEL && (p.l - c).powi(2) < 9.0 * h && h > MIN_REL_STEP * self.node.t.max(1.0);
        if near || deep {
            self.advance(0.5 * h, level + 1, rejects, None)?;
            return self.advance(0.5 * h, level + 1, rejects, end);
        }
        loop {
            let t0 = self.node.t;
            let t1 = end.unwrap_or(t0 + h);
            let hh = t1 - t0;
            let y0 = self.node.y;
            let y1 = y0 + drift_at(&p, y0) * hh + hh.sqrt() * normal(&mut self.rng);
            let q = self.spec.point(t1);
            if (y1 - q.f).abs() < q.l && y1.is_finite() {
                let (c0, c1) = (y0 - p.f, y1 - q.f);
                self.node.acc_f += 0.5 * hh * (p.ddf * c0 + q.ddf * c1);
                self.node.acc_l += 0.5 * hh * (p.ddl / (2.0 * p.l) * c0 * c0 + q.ddl / (2.0 * q.l) * c1 * c1);
                self.node.t = t1;
                self.node.y = y1;
                self.point = q;
                self.substeps += 1;
                return Ok(());
            }
            *rejects += 1;
            self.rejections += 1;
            if *rejects > MAX_REJECTS {
                return Err(Error::Step { t: t0, y: y0 });
            }
            if level < WALL_LEVEL && hh > MIN_REL_STEP * t0.max(1.0) {
                self.advance(0.5 * hh, level + 1, rejects, None)?;
                return self.advance(0.5 * hh, level + 1, rejects, end);
            }
        }
    }

    /// Offset of the spine from the centre relative to the half-width.
    pub fn relative(&self) -> f64 {
        (self.node.y - self.point.f) / self.point.l
    }

    /// `log ζ(t) + R₀(t)` where `R₀` is the rate integral at zero branching rate.
    pub fn log_zeta_shift(&self, y0: f64, df0: f64) -> f64 {
        let p = &self.point;
        let c = self.node.y - p.f;
        let ex = p.df * c - df0 * y0 - self.node.acc_f + p.dl / (2.0 * p.l) * c * c - self.node.acc_l;
        ex + (PI * c / (2.0 * p.l)).cos().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::builtin;

    #[test]
    fn drift_examples() {
        let s = builtin("linear_const", &[("lambda", 0.0), ("L", 1.0)]).unwrap();
        assert_eq!(spine_drift(&s, 0.3, 0.0).unwrap(), 0.0);
        assert!((spine_drift(&s, 0.3, 0.5).unwrap() + FRAC_PI_2).abs() < 1e-14);
        for y in [0.1, 0.45, 0.8, 0.99] {
            let a = spine_drift(&s, 1.0, y).unwrap();
            let b = spine_drift(&s, 1.0, -y).unwrap();
            assert!((a + b).abs() < 1e-12 * a.abs().max(1.0));
        }
        assert!(matches!(spine_drift(&s, 0.0, 1.0), Err(Error::Domain(_))));
        let m = builtin("linear_const", &[("lambda", 2.0), ("L", 1.0)]).unwrap();
        assert_eq!(spine_drift(&m, 3.0, 6.0).unwrap(), 2.0);
    }

    #[test]
    fn walker_stays_inside() {
        let s = builtin("linear_const", &[("lambda", 0.0), ("L", 0.2)]).unwrap();
        let mut w = Walker::new(&s, 11, 12, 0.0, 0.0).unwrap();
        for k in 1..=2000 {
            w.advance_to(k as f64 * 1e-3).unwrap();
            assert!(w.relative().abs() < 1.0);
        }
        assert_eq!(w.node.t, 2.0);
    }
}
