use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    classify_regime, growth_ratio, many_to_one_check, martingale_test, occupation_bound, occupation_tail,
    survival_importance, z_sample, Regime,
};
use crate::path::PathSpec;
use crate::rates::RateCurve;
use crate::sim::{default_record_grid, growth_trajectories, run_trees, survival_direct, GineqStats, SimParams};

/// A statistical check runnable from `verify` or a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Martingale,
    Manytoone,
    Gineq,
    Survival,
    Growth,
    Regime,
    Occupation,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Martingale => "martingale",
            Suite::Manytoone => "manytoone",
            Suite::Gineq => "gineq",
            Suite::Survival => "survival",
            Suite::Growth => "growth",
            Suite::Regime => "regime",
            Suite::Occupation => "occupation",
        }
    }
}

/// Settings shared by every suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    pub r: f64,
    pub seed: u64,
    pub replicates: u64,
    pub horizon: f64,
    pub dt: f64,
    pub cap: usize,
}

impl VerifyParams {
    fn sim(&self) -> SimParams {
        SimParams::new(self.r, self.dt, self.horizon)
            .with_seed(self.seed)
            .with_replicates(self.replicates)
            .with_cap(self.cap)
    }
}

/// One machine-readable verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteVerdict {
    pub suite: Suite,
    pub check: String,
    pub pass: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

impl SuiteVerdict {
    fn new(suite: Suite, check: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        SuiteVerdict {
            suite,
            check: check.into(),
            pass,
            detail: detail.into(),
            metrics: BTreeMap::new(),
        }
    }

    fn metric(mut self, k: &str, v: f64) -> Self {
        self.metrics.insert(k.to_string(), v);
        self
    }
}

const Z_MAX: f64 = 3.0;
const GROWTH_BAND: (f64, f64) = (0.8, 1.2);
const REGIME_HORIZONS: [f64; 3] = [1e2, 1e3, 1e4];
/// `(t, δ, k)` points of the occupation-time check.
pub const OCCUPATION_GRID: [(f64, f64, f64); 8] = [
    (1.0, 0.1, 0.2),
    (1.0, 0.1, 0.5),
    (1.0, 0.3, 0.2),
    (1.0, 0.3, 0.5),
    (2.0, 0.1, 0.2),
    (2.0, 0.1, 0.5),
    (2.0, 0.3, 0.2),
    (2.0, 0.3, 0.5),
];

/// Runs one suite against `spec`.
pub fn run_suite(suite: Suite, spec: &PathSpec, v: &VerifyParams) -> Result<Vec<SuiteVerdict>> {
    let t = v.horizon;
    match suite {
        Suite::Martingale => {
            let p = v.sim().with_record_grid(vec![0.0, 0.25 * t, 0.5 * t, t]);
            let rep = martingale_test(&z_sample(spec, &p)?)?;
            Ok(rep
                .times
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &s)| {
                    SuiteVerdict::new(
                        suite,
                        format!("mean Z({s})"),
                        rep.z[j].abs() <= Z_MAX,
                        format!("{:.5}±{:.5} vs 1, z={:.2}", rep.means[j], rep.std_errs[j], rep.z[j]),
                    )
                    .metric("t", s)
                    .metric("mean", rep.means[j])
                    .metric("std_err", rep.std_errs[j])
                    .metric("z", rep.z[j])
                })
                .collect())
        }
        Suite::Manytoone => {
            let m = many_to_one_check(spec, &v.sim(), t)?;
            Ok(vec![SuiteVerdict::new(
                suite,
                format!("E|N({t})|"),
                m.z.abs() <= Z_MAX,
                format!("trees {:.5}±{:.5} vs single path {:.5}±{:.5}, z={:.2}", m.lhs.value, m.lhs.std_err, m.rhs.value, m.rhs.std_err, m.z),
            )
            .metric("lhs", m.lhs.value)
            .metric("rhs", m.rhs.value)
            .metric("z", m.z)])
        }
        Suite::Gineq => {
            let p = v.sim().with_weights(true).with_record_grid(default_record_grid(t, v.dt, 16));
            let mut g = GineqStats::default();
            for run in run_trees(spec, &p)? {
                if let Some(s) = &run.gineq {
                    g.merge(s);
                }
            }
            let bad = g.violations_grid + g.violations_quad;
            Ok(vec![SuiteVerdict::new(
                suite,
                "envelope violations",
                bad == 0,
                format!("{bad} violations over {} checks ({} surviving paths), max ratio {:.3}", g.checks, g.paths, g.max_ratio),
            )
            .metric("violations", bad as f64)
            .metric("checks", g.checks as f64)
            .metric("paths", g.paths as f64)
            .metric("max_ratio", g.max_ratio)])
        }
        Suite::Survival => {
            let d = survival_direct(spec, &v.sim(), t)?;
            let i = survival_importance(spec, &v.sim(), t)?;
            let z = d.z_against(&i);
            Ok(vec![SuiteVerdict::new(
                suite,
                format!("P(survive {t})"),
                z.abs() <= Z_MAX,
                format!("direct {:.5}±{:.5} vs importance {:.5}±{:.5}, z={z:.2}", d.value, d.std_err, i.value, i.std_err),
            )
            .metric("direct", d.value)
            .metric("importance", i.value)
            .metric("importance_se", i.std_err)
            .metric("z", z)])
        }
        Suite::Growth => {
            let runs = growth_trajectories(spec, &v.sim().with_record_grid(vec![t]))?;
            let curve = RateCurve::build(spec, v.r, &[t], 1e-9)?;
            let e = growth_ratio(&runs, &curve, t)?;
            Ok(vec![SuiteVerdict::new(
                suite,
                format!("log|N({t})| / R({t})"),
                (GROWTH_BAND.0..=GROWTH_BAND.1).contains(&e.value),
                format!(
                    "{:.4}±{:.4} over {} survivors ({} extinct, {} capped)",
                    e.value, e.std_err, e.n, runs.extinct, runs.cap_excluded
                ),
            )
            .metric("ratio", e.value)
            .metric("std_err", e.std_err)])
        }
        Suite::Regime => {
            let rep = classify_regime(spec, v.r, &REGIME_HORIZONS)?;
            // An undecided sign is expected, not a failure, when a critical prediction explains it.
            let pass = rep.classification != Regime::Inconclusive || rep.critical.is_some();
            let class = serde_json::to_value(rep.classification).map_err(|e| Error::Input(e.to_string()))?;
            let mut detail = format!(
                "{} with S in [{:.6}, {:.6}], R/t at {:.0e} = {:.6}",
                class.as_str().unwrap_or("?"),
                rep.s_bracket.0,
                rep.s_bracket.1,
                REGIME_HORIZONS[2],
                rep.predicted_rate
            );
            if let Some(n) = &rep.note {
                detail.push_str("; ");
                detail.push_str(n);
            }
            let mut out = SuiteVerdict::new(suite, "sign of S", pass, detail)
                .metric("s_lo", rep.s_bracket.0)
                .metric("s_hi", rep.s_bracket.1)
                .metric("predicted_rate", rep.predicted_rate);
            if let Some(x) = rep.extrapolated {
                out = out.metric("extrapolated", x);
            }
            Ok(vec![out])
        }
        Suite::Occupation => OCCUPATION_GRID
            .iter()
            .enumerate()
            .map(|(i, &(s, delta, k))| {
                let e = occupation_tail(s, delta, k, v.dt, v.replicates, v.seed ^ (1300 + i as u64))?;
                let bound = occupation_bound(s, delta, k);
                let slack = e.value - Z_MAX * e.std_err - bound;
                Ok(SuiteVerdict::new(
                    suite,
                    format!("t={s} delta={delta} k={k}"),
                    slack <= 0.0,
                    format!("{:.5}±{:.5} vs bound {bound:.5}", e.value, e.std_err),
                )
                .metric("estimate", e.value)
                .metric("bound", bound)
                .metric("slack", slack))
            })
            .collect(),
    }
}
