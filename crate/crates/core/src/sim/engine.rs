//! Fixed-step propagation of a population of killed, branching Brownian particles.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use crate::path::{PathPoint, PathSpec};
use crate::rng::{child_key, CounterRng};

/// One particle of `N̂`, with its running path integrals.
#[derive(Debug, Clone, Copy)]
pub struct Particle {
    pub x: f64,
    /// Absolute time of the next fission.
    pub clock: f64,
    pub rng: CounterRng,
    /// Trapezoid sum of `f″ (X − f)` along the ancestral path.
    pub acc_f: f64,
    /// Trapezoid sum of `(L″/2L) (X − f)²` along the ancestral path.
    pub acc_l: f64,
}

impl Particle {
    /// A fresh particle at `(t, x)` whose stream is `key`.
    pub fn seed(key: u64, t: f64, x: f64, r: f64) -> Particle {
        let mut rng = CounterRng::new(key);
        let clock = t + exp_draw(&mut rng, r);
        Particle {
            x,
            clock,
            rng,
            acc_f: 0.0,
            acc_l: 0.0,
        }
    }
}

#[inline]
pub(crate) fn exp_draw(rng: &mut CounterRng, rate: f64) -> f64 {
    if rate > 0.0 {
        -rng.open01().ln() / rate
    } else {
        f64::INFINITY
    }
}

#[inline]
pub(crate) fn normal(rng: &mut CounterRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Boundary data at one time.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub t: f64,
    pub p: PathPoint,
}

impl Frame {
    pub fn at(spec: &PathSpec, t: f64) -> Frame {
        Frame { t, p: spec.point(t) }
    }

    /// Linear interpolation of the centre and width between two frames.
    #[inline]
    fn lerp(a: &Frame, b: &Frame, t: f64) -> (f64, f64) {
        let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        (a.p.f + w * (b.p.f - a.p.f), a.p.l + w * (b.p.l - a.p.l))
    }
}

/// Probability that a Brownian bridge of duration `h` between two interior
/// points stays below a straight-line barrier it starts `d0` and ends `d1` from.
#[inline]
pub fn bridge_survival(d0: f64, d1: f64, h: f64) -> f64 {
    let a = 2.0 * d0 * d1 / h;
    if a > 40.0 {
        1.0
    } else {
        -(-a).exp_m1()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepConfig {
    pub r: f64,
    pub cap: usize,
    pub bridge: bool,
}

/// Outcome of one step for the whole population.
#[derive(Debug, Default, Clone, Copy)]
pub struct StepReport {
    pub killed: usize,
    pub births: usize,
    pub suppressed: usize,
}

/// Optional record of one birth: time, position and parent key.
pub type BirthRecord = (f64, f64, u64);

/// Moves `pop` from `a.t` to `b.t`. Fission events inside the step are
/// resolved at their exact clock times. Once the population reaches
/// `cfg.cap`, further fissions are skipped and counted in `suppressed`.
pub fn step_population(
    pop: &mut Vec<Particle>,
    scratch: &mut Vec<Particle>,
    a: &Frame,
    b: &Frame,
    cfg: &StepConfig,
    mut births_log: Option<&mut Vec<BirthRecord>>,
) -> StepReport {
    let mut rep = StepReport::default();
    scratch.clear();
    // (particle, segment start time, position there, ancestral position at a.t)
    let mut pending: Vec<(Particle, f64, f64, f64)> = Vec::new();
    let mut population = pop.len();
    let h_full = b.t - a.t;
    let (fa, la) = (a.p.f, a.p.l);
    let (fb, lb) = (b.p.f, b.p.l);
    let ya_coef_f = a.p.ddf;
    let yb_coef_f = b.p.ddf;
    let ya_coef_l = a.p.ddl / (2.0 * la);
    let yb_coef_l = b.p.ddl / (2.0 * lb);

    let finish = |mut q: Particle, s: f64, xs: f64, x_node: f64, rep: &mut StepReport, out: &mut Vec<Particle>| {
        let h = b.t - s;
        let x1 = xs + h.sqrt() * normal(&mut q.rng);
        if (x1 - fb).abs() >= lb {
            rep.killed += 1;
            return;
        }
        if cfg.bridge {
            let (fs, ls) = if s == a.t { (fa, la) } else { Frame::lerp(a, b, s) };
            let keep = bridge_survival(fs + ls - xs, fb + lb - x1, h) * bridge_survival(xs - fs + ls, x1 - fb + lb, h);
            if keep < 1.0 && q.rng.open01() > keep {
                rep.killed += 1;
                return;
            }
        }
        let y0 = x_node - fa;
        let y1 = x1 - fb;
        q.acc_f += 0.5 * h_full * (ya_coef_f * y0 + yb_coef_f * y1);
        q.acc_l += 0.5 * h_full * (ya_coef_l * y0 * y0 + yb_coef_l * y1 * y1);
        q.x = x1;
        out.push(q);
    };

    let split = |mut q: Particle,
                     s: f64,
                     xs: f64,
                     x_node: f64,
                     population: &mut usize,
                     rep: &mut StepReport,
                     pending: &mut Vec<(Particle, f64, f64, f64)>,
                     log: &mut Option<&mut Vec<BirthRecord>>|
     -> Option<(Particle, f64, f64)> {
        // Advance to the fission time; None if killed on the way.
        let tau = q.clock;
        let h = tau - s;
        let xt = xs + h.sqrt() * normal(&mut q.rng);
        let (ft, lt) = Frame::lerp(a, b, tau);
        if (xt - ft).abs() >= lt {
            rep.killed += 1;
            return None;
        }
        if cfg.bridge {
            let (fs, ls) = if s == a.t { (fa, la) } else { Frame::lerp(a, b, s) };
            let keep = bridge_survival(fs + ls - xs, ft + lt - xt, h) * bridge_survival(xs - fs + ls, xt - ft + lt, h);
            if keep < 1.0 && q.rng.open01() > keep {
                rep.killed += 1;
                return None;
            }
        }
        if *population >= cfg.cap {
            rep.suppressed += 1;
            q.clock = f64::INFINITY;
            return Some((q, tau, xt));
        }
        let parent = q.rng.key();
        if let Some(l) = log.as_mut() {
            l.push((tau, xt, parent));
        }
        let mut c0 = Particle::seed(child_key(parent, 0), tau, xt, cfg.r);
        let mut c1 = Particle::seed(child_key(parent, 1), tau, xt, cfg.r);
        c0.acc_f = q.acc_f;
        c0.acc_l = q.acc_l;
        c1.acc_f = q.acc_f;
        c1.acc_l = q.acc_l;
        *population += 1;
        rep.births += 1;
        pending.push((c1, tau, xt, x_node));
        Some((c0, tau, xt))
    };

    for &p0 in pop.iter() {
        let x_node = p0.x;
        let mut cur = (p0, a.t, p0.x);
        let mut alive = true;
        while cur.0.clock < b.t {
            match split(cur.0, cur.1, cur.2, x_node, &mut population, &mut rep, &mut pending, &mut births_log) {
                Some(next) => cur = next,
                None => {
                    alive = false;
                    break;
                }
            }
        }
        if alive {
            finish(cur.0, cur.1, cur.2, x_node, &mut rep, scratch);
        }
        while let Some((q, s, xs, xn)) = pending.pop() {
            let mut cur = (q, s, xs);
            let mut alive = true;
            while cur.0.clock < b.t {
                match split(cur.0, cur.1, cur.2, xn, &mut population, &mut rep, &mut pending, &mut births_log) {
                    Some(next) => cur = next,
                    None => {
                        alive = false;
                        break;
                    }
                }
            }
            if alive {
                finish(cur.0, cur.1, cur.2, xn, &mut rep, scratch);
            }
        }
    }
    std::mem::swap(pop, scratch);
    rep
}

/// `log(e^{−rt} ζ(t)) + R(t)` for a particle at frame `fr`: the path excess
/// plus the log cosine factor. `y0` is the common starting offset and `df0 = f′(0)`.
#[inline]
pub fn log_weight_shift(q: &Particle, fr: &Frame, y0: f64, df0: f64) -> f64 {
    let y = q.x - fr.p.f;
    excess(q, fr, y0, df0) + (PI * y / (2.0 * fr.p.l)).cos().ln()
}

/// `log G_u(t) − ½∫f′² − ∫π²/8L² + ½log(L(t)/L(0))`, via integration by parts on the centred path.
#[inline]
pub fn excess(q: &Particle, fr: &Frame, y0: f64, df0: f64) -> f64 {
    let y = q.x - fr.p.f;
    fr.p.df * y - df0 * y0 - q.acc_f + fr.p.dl / (2.0 * fr.p.l) * y * y - q.acc_l
}

/// Deterministic node grid: `n` equal steps from 0 to `horizon`.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub horizon: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(horizon: f64, dt: f64) -> Grid {
        let steps = if horizon > 0.0 { ((horizon / dt) - 1e-9).ceil().max(1.0) as usize } else { 0 };
        Grid { horizon, steps }
    }

    pub fn dt(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.horizon / self.steps as f64
        }
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    /// Nearest node index to `t`.
    pub fn node(&self, t: f64) -> usize {
        if self.steps == 0 {
            return 0;
        }
        ((t / self.dt()).round() as usize).min(self.steps)
    }

    /// First node index strictly after `t`.
    pub fn next_node(&self, t: f64) -> usize {
        if self.steps == 0 {
            return 0;
        }
        let k = (t / self.dt()).floor() as usize + 1;
        k.min(self.steps)
    }
}
