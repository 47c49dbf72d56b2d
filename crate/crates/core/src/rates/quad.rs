//! Adaptive Simpson quadrature with a Richardson-corrected acceptance test.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Absolute error target over the whole interval.
    pub abs_tol: f64,
    /// Relative floor against the estimated `∫|f|` over the whole range.
    pub rel_tol: f64,
    pub max_depth: u32,
    pub min_depth: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-12,
            max_depth: 40,
            min_depth: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadOutcome {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

struct State<'f, F: Fn(f64) -> f64> {
    f: &'f F,
    q: Quadrature,
    evals: usize,
    bad_point: Option<f64>,
    // worst unconverged leaf: (a, b, error)
    failure: Option<(f64, f64, f64)>,
}

impl<F: Fn(f64) -> f64> State<'_, F> {
    #[inline]
    fn eval(&mut self, x: f64) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if !v.is_finite() {
            self.bad_point.get_or_insert(x);
            return 0.0;
        }
        v
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let both = left + right;
        let delta = both - whole;
        if depth >= self.q.min_depth && delta.abs() <= 15.0 * tol {
            return (both + delta / 15.0, delta.abs() / 15.0);
        }
        // Leaves this narrow carry no useful information beyond round-off.
        if h <= 1e-11 * m.abs().max(1.0) {
            return (both + delta / 15.0, delta.abs() / 15.0);
        }
        if depth >= self.q.max_depth {
            let err = delta.abs() / 15.0;
            if self.failure.is_none_or(|(_, _, e)| err > e) {
                self.failure = Some((a, b, err));
            }
            return (both + delta / 15.0, err);
        }
        let (vl, el) = self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1);
        let (vr, er) = self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
        (vl + vr, el + er)
    }
}

impl Quadrature {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Result<QuadOutcome> {
        self.integrate_panels(f, &[a, b])
    }

    /// Integrate over consecutive panels `[p0,p1], [p1,p2], ...`; the absolute
    /// tolerance is shared out in proportion to panel width.
    pub fn integrate_panels<F: Fn(f64) -> f64>(&self, f: &F, points: &[f64]) -> Result<QuadOutcome> {
        if points.len() < 2 {
            return Ok(QuadOutcome::default());
        }
        let span = points[points.len() - 1] - points[0];
        if span == 0.0 {
            return Ok(QuadOutcome::default());
        }
        let mut st = State {
            f,
            q: *self,
            evals: 0,
            bad_point: None,
            failure: None,
        };
        let mut panels = Vec::with_capacity(points.len() - 1);
        let mut mass = 0.0;
        let mut f_prev = st.eval(points[0]);
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let fm = st.eval(0.5 * (a + b));
            let fb = st.eval(b);
            mass += (b - a) / 6.0 * (f_prev.abs() + 4.0 * fm.abs() + fb.abs());
            panels.push((a, b, f_prev, fm, fb));
            f_prev = fb;
        }
        let target = self.abs_tol.max(self.rel_tol * mass);
        let mut total = 0.0;
        let mut comp = 0.0;
        let mut err = 0.0;
        for (a, b, fa, fm, fb) in panels {
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let tol = target * (b - a) / span;
            let (v, e) = st.recurse(a, b, fa, fm, fb, whole, tol, 0);
            // Kahan summation across panels
            let y = v - comp;
            let s = total + y;
            comp = (s - total) - y;
            total = s;
            err += e;
        }
        if let Some(x) = st.bad_point {
            return Err(Error::Domain(format!("integrand is not finite at t={x}")));
        }
        if let Some((a, b, e)) = st.failure {
            // An unconverged leaf is acceptable only if the total estimate still meets the target.
            if err > 10.0 * target {
                return Err(Error::Quadrature { a, b, err: e });
            }
        }
        Ok(QuadOutcome {
            value: total,
            error: err,
            evals: st.evals,
        })
    }
}
