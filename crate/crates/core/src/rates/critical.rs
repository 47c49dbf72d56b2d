//! Predicted constants for tubes hugging the critical line `√(2r) t`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalRegime {
    SubcriticalBeta,
    SupercriticalBeta,
    ThirdLower,
    ThirdUpper,
    ThirdGrowthLower,
    ThirdGrowthUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPrediction {
    pub regime: CriticalRegime,
    /// Power of `t` used to normalise the logarithm.
    pub exponent: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThirdRegion {
    /// Extinction almost surely; survival probability bounds apply.
    Extinction,
    /// Positive survival probability; growth bounds apply.
    Growth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalReport {
    pub predictions: Vec<CriticalPrediction>,
    pub gamma0: Option<f64>,
    pub gamma1: Option<f64>,
    pub region: Option<ThirdRegion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalFamily {
    BetaEx,
    ThirdEx,
}

impl std::str::FromStr for CriticalFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "betaex" => Ok(Self::BetaEx),
            "thirdex" => Ok(Self::ThirdEx),
            other => Err(Error::Input(format!("no critical predictions for family {other:?}"))),
        }
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| Error::Input(format!("missing parameter {key}")))
}

fn positive(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let v = param(params, key)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Input(format!("parameter {key} must be positive, got {v}")));
    }
    Ok(v)
}

/// `(γ₀, γ₁)` for branching rate `r`.
pub fn third_thresholds(r: f64) -> (f64, f64) {
    let s = (2.0 * r).sqrt();
    let g0 = (3.0 * PI * PI / (8.0 * s)).cbrt();
    let g1 = (3.0 * PI * PI / (4.0 * s)).cbrt();
    (g0, g1)
}

/// Which regime, if any, `(α, γ)` falls in at `β = 1/3`.
pub fn third_region(alpha: f64, gamma: f64, r: f64) -> Result<ThirdRegion> {
    let s = (2.0 * r).sqrt();
    let (g0, g1) = third_thresholds(r);
    let ext_alpha = 3.0 * PI * PI / (8.0 * gamma * gamma * s) - gamma;
    if gamma < g0 && alpha < ext_alpha {
        return Ok(ThirdRegion::Extinction);
    }
    if gamma >= g1 {
        if alpha > 1.5 * g1 {
            return Ok(ThirdRegion::Growth);
        }
        return Err(Error::Region(format!(
            "gamma={gamma} >= gamma1={g1} but alpha={alpha} <= 3*gamma1/2={}",
            1.5 * g1
        )));
    }
    let grow_alpha = gamma + 3.0 * PI * PI / (8.0 * gamma * gamma * s);
    if alpha > grow_alpha {
        return Ok(ThirdRegion::Growth);
    }
    if gamma < g0 {
        Err(Error::Region(format!(
            "alpha={alpha} lies in [{ext_alpha}, {grow_alpha}]: neither alpha < 3pi^2/(8 gamma^2 sqrt(2r)) - gamma \
             nor alpha > gamma + 3pi^2/(8 gamma^2 sqrt(2r))"
        )))
    } else {
        Err(Error::Region(format!(
            "gamma={gamma} >= gamma0={g0} rules out extinction, and alpha={alpha} <= gamma + 3pi^2/(8 gamma^2 sqrt(2r))={grow_alpha}"
        )))
    }
}

pub fn critical_predictions(family: CriticalFamily, params: &BTreeMap<String, f64>) -> Result<CriticalReport> {
    let alpha = positive(params, "alpha")?;
    let gamma = positive(params, "gamma")?;
    let r = positive(params, "r")?;
    let s = (2.0 * r).sqrt();
    match family {
        CriticalFamily::BetaEx => {
            let beta = param(params, "beta")?;
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Input(format!("beta must lie in (0,1), got {beta}")));
            }
            if (beta - 1.0 / 3.0).abs() < 1e-15 {
                return Err(Error::Input("beta = 1/3 is the thirdex family".into()));
            }
            let p = if beta < 1.0 / 3.0 {
                CriticalPrediction {
                    regime: CriticalRegime::SubcriticalBeta,
                    exponent: 1.0 - 2.0 * beta,
                    constant: -PI * PI / (8.0 * gamma * gamma * (1.0 - 2.0 * beta)),
                }
            } else {
                CriticalPrediction {
                    regime: CriticalRegime::SupercriticalBeta,
                    exponent: beta,
                    constant: (alpha + gamma) * s,
                }
            };
            Ok(CriticalReport {
                predictions: vec![p],
                gamma0: None,
                gamma1: None,
                region: None,
            })
        }
        CriticalFamily::ThirdEx => {
            if let Some(&beta) = params.get("beta") {
                if (beta - 1.0 / 3.0).abs() > 1e-12 {
                    return Err(Error::Input(format!("thirdex fixes beta = 1/3, got {beta}")));
                }
            }
            let (g0, g1) = third_thresholds(r);
            let region = third_region(alpha, gamma, r)?;
            let base = alpha * s - 3.0 * PI * PI / (8.0 * gamma * gamma);
            let gm = gamma.max(g1);
            let third = 1.0 / 3.0;
            let mk = |regime, constant| CriticalPrediction {
                regime,
                exponent: third,
                constant,
            };
            Ok(CriticalReport {
                predictions: vec![
                    mk(CriticalRegime::ThirdLower, base - gamma * s),
                    mk(CriticalRegime::ThirdUpper, base + gamma * s),
                    mk(
                        CriticalRegime::ThirdGrowthLower,
                        alpha * s - 3.0 * PI * PI / (8.0 * gm * gm) - gm * s,
                    ),
                    mk(CriticalRegime::ThirdGrowthUpper, base + gamma * s),
                ],
                gamma0: Some(g0),
                gamma1: Some(g1),
                region: Some(region),
            })
        }
    }
}

impl CriticalReport {
    pub fn get(&self, regime: CriticalRegime) -> Option<&CriticalPrediction> {
        self.predictions.iter().find(|p| p.regime == regime)
    }
}
