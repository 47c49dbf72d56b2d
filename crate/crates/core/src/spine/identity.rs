use std::f64::consts::PI;

use super::rate0_at;
use crate::error::{Error, Result};
use crate::path::{eval_path, PathSpec};
use crate::rates::error_budget;

/// `ζ(t)` of a single path given as `(time, position)` samples starting at time 0.
///
/// Path integrals use the trapezoid rule on the samples; the last sample at or
/// after `t` is interpolated to `t`. A sample outside the tube gives 0.
pub fn zeta(spec: &PathSpec, path: &[(f64, f64)], t: f64) -> Result<f64> {
    let Some(&(t_first, x0)) = path.first() else {
        return Err(Error::Input("empty path".into()));
    };
    if t_first != 0.0 {
        return Err(Error::Input("path must start at time 0".into()));
    }
    if path.last().unwrap().0 < t * (1.0 - 1e-12) {
        return Err(Error::Input(format!("path ends before t={t}")));
    }
    let p0 = eval_path(spec, 0.0)?;
    let y0 = x0 - p0.f;
    if !p0.contains(x0) {
        return Ok(0.0);
    }
    let (mut acc_f, mut acc_l) = (0.0, 0.0);
    let (mut prev_t, mut prev_c, mut prev_p) = (0.0, y0, p0);
    for w in path.windows(2) {
        if prev_t >= t {
            break;
        }
        let (ta, xa) = w[0];
        let (tb, xb) = w[1];
        if tb <= ta {
            return Err(Error::Input("path times must be strictly increasing".into()));
        }
        let (t1, x1) = if tb > t { (t, xa + (xb - xa) * (t - ta) / (tb - ta)) } else { (tb, xb) };
        let q = eval_path(spec, t1)?;
        if !q.contains(x1) {
            return Ok(0.0);
        }
        let c1 = x1 - q.f;
        let h = t1 - prev_t;
        acc_f += 0.5 * h * (prev_p.ddf * prev_c + q.ddf * c1);
        acc_l += 0.5 * h * (prev_p.ddl / (2.0 * prev_p.l) * prev_c * prev_c + q.ddl / (2.0 * q.l) * c1 * c1);
        (prev_t, prev_c, prev_p) = (t1, c1, q);
    }
    let p = prev_p;
    let c = prev_c;
    let excess = p.df * c - p0.df * y0 - acc_f + p.dl / (2.0 * p.l) * c * c - acc_l;
    let r0 = rate0_at(spec, &[t])?[0];
    Ok((excess - r0).exp() * (PI * c / (2.0 * p.l)).cos())
}

/// Deterministic bounds `(lo, hi)` on `log G_u(t)` for a particle started at `x0`.
pub fn gineq_bounds(spec: &PathSpec, t: f64, x0: f64) -> Result<(f64, f64)> {
    let p0 = eval_path(spec, 0.0)?;
    let centre = -rate0_at(spec, &[t])?[0];
    let e = error_budget(spec, t, 1e-10)? + (p0.df * (x0 - p0.f)).abs();
    Ok((centre - e, centre + e))
}

/// The nine terms of `dU / F` for `U = F cos(πy/2L)` along a centred path at
/// displacement `y`: seven `dt` coefficients (which sum to zero) and the two
/// `dy` coefficients of the martingale part.
pub fn generator_terms(spec: &PathSpec, t: f64, y: f64) -> Result<([f64; 7], [f64; 2])> {
    let p = eval_path(spec, t)?;
    let (l, dl, ddl) = (p.l, p.dl, p.ddl);
    let a = PI * y / (2.0 * l);
    let (s, c) = a.sin_cos();
    let k = PI * PI / (8.0 * l * l);
    let dt = [
        k * c,
        (ddl / (2.0 * l) - dl * dl / (2.0 * l * l)) * y * y * c,
        -(ddl * y * y / (2.0 * l) + dl / (2.0 * l)) * c,
        PI * dl * y / (2.0 * l * l) * s,
        (dl / (2.0 * l) + dl * dl * y * y / (2.0 * l * l)) * c,
        -k * c,
        -PI * dl * y / (2.0 * l * l) * s,
    ];
    let dy = [dl * y / l * c, -PI / (2.0 * l) * s];
    Ok((dt, dy))
}

/// Finite-difference generator of `U` divided by `U`: should vanish inside the tube.
pub fn generator_fd_residual(spec: &PathSpec, t: f64, y: f64, h: f64) -> Result<f64> {
    let phi = |t: f64, y: f64| -> Result<f64> {
        let p = eval_path(spec, t)?;
        Ok((p.dl * y * y / (2.0 * p.l)).exp() * (PI * y / (2.0 * p.l)).cos())
    };
    let p = eval_path(spec, t)?;
    let v = phi(t, y)?;
    let dt = (phi(t + h, y)? - phi(t - h, y)?) / (2.0 * h);
    let dyy = (phi(t, y + h)? - 2.0 * v + phi(t, y - h)?) / (h * h);
    let rate = PI * PI / (8.0 * p.l * p.l) - p.ddl * y * y / (2.0 * p.l) - p.dl / (2.0 * p.l);
    Ok(rate + (dt + 0.5 * dyy) / v)
}
