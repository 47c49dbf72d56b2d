use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::{PathSpec, SpecSource};
use crate::rates::{critical_predictions, estimate_s, rate_integral, CriticalFamily, CriticalReport};
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    ExtinctAs,
    SurvivePositiveProb,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub s_bracket: (f64, f64),
    pub classification: Regime,
    /// `R(t)/t` at the largest horizon.
    pub predicted_rate: f64,
    /// Aitken extrapolation of `R(t)/t` over the last three horizons, when defined.
    pub extrapolated: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_rate: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical: Option<CriticalReport>,
    pub note: Option<String>,
}

impl RegimeReport {
    pub fn with_observation(mut self, e: Estimate) -> Self {
        self.observed_rate = Some(e);
        self
    }
}

/// Margin by which the `S` bracket must exclude 0 for a definite classification.
pub const BAND: f64 = 1e-6;

fn aitken(a: [f64; 3]) -> Option<f64> {
    let d1 = a[1] - a[0];
    let d2 = a[2] - a[1];
    let den = d2 - d1;
    let monotone_to_zero = a.iter().all(|v| v.signum() == a[0].signum()) && a[0].abs() > a[1].abs() && a[1].abs() > a[2].abs();
    let contracting = d2.abs() < d1.abs() && d1.abs() > 1e-12 * a[0].abs();
    (monotone_to_zero && contracting && den != 0.0).then(|| a[2] - d2 * d2 / den)
}

/// Sign of `S` from the tail of `R(t)/t` over `horizons`.
///
/// A bracket that does not clear 0 by [`BAND`], or a tail that decays
/// geometrically towards 0 (Aitken limit within `BAND` of 0), is inconclusive.
/// Builtin critical families run at their own `r` have `S = 0` and are
/// inconclusive whatever the finite-horizon bracket says; they carry their
/// predicted constants instead.
pub fn classify_regime(spec: &PathSpec, r: f64, horizons: &[f64]) -> Result<RegimeReport> {
    let s_bracket = estimate_s(spec, r, horizons)?;
    let t_last = *horizons.iter().max_by(|a, b| a.total_cmp(b)).unwrap();
    let predicted_rate = rate_integral(spec, r, t_last, 1e-9)? / t_last;
    let extrapolated = if horizons.len() >= 3 {
        let mut hs = horizons.to_vec();
        hs.sort_by(f64::total_cmp);
        let n = hs.len();
        let mut a = [0.0; 3];
        for (k, &t) in hs[n - 3..].iter().enumerate() {
            a[k] = rate_integral(spec, r, t, 1e-9)? / t;
        }
        aitken(a)
    } else {
        None
    };
    let mut note = None;
    let mut classification = if s_bracket.1 < -BAND {
        Regime::ExtinctAs
    } else if s_bracket.0 > BAND {
        Regime::SurvivePositiveProb
    } else {
        note = Some("S bracket straddles 0".to_string());
        Regime::Inconclusive
    };
    if classification != Regime::Inconclusive && extrapolated.is_some_and(|x| x.abs() <= BAND) {
        classification = Regime::Inconclusive;
        note = Some("R(t)/t decays towards 0; S = 0 is not decided by its sign".to_string());
    }
    let mut critical = None;
    if let SpecSource::Builtin { family, params } = spec.source() {
        let fam = match family.as_str() {
            "betaex" => Some(CriticalFamily::BetaEx),
            "thirdex" => Some(CriticalFamily::ThirdEx),
            _ => None,
        };
        if let Some(fam) = fam {
            // f′ → √(2r₀) and L → ∞, so S = r − r₀ exactly.
            let r0 = params["r"];
            if (r - r0).abs() <= BAND {
                classification = Regime::Inconclusive;
                note = Some(format!("S = 0 for {family} at r = {r0}; see the critical predictions"));
            }
            match critical_predictions(fam, params) {
                Ok(c) => critical = Some(c),
                Err(Error::Region(m)) => {
                    let m = format!("not covered by the known critical regions: {m}");
                    note = Some(note.map_or(m.clone(), |n| format!("{n}; {m}")));
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(RegimeReport {
        s_bracket,
        classification,
        predicted_rate,
        extrapolated,
        observed_rate: None,
        critical,
        note,
    })
}
