//! Monte Carlo summaries.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Importance,
    Ratio,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Kish effective sample size, for weighted estimators.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    /// Replicates in which the event never occurred.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_hits: Option<u64>,
    /// Replicates dropped or flagged because the population cap was hit.
    pub cap_excluded: u64,
    /// The value is a bound rather than a point estimate.
    pub one_sided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub n: u64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl Estimate {
    /// Sample mean and standard error of the mean.
    pub fn from_samples(xs: &[f64], method: Method) -> Estimate {
        let (mean, se) = mean_se(xs);
        Estimate {
            value: mean,
            std_err: se,
            n: xs.len() as u64,
            method,
            diagnostics: Diagnostics::default(),
        }
    }

    /// Binomial proportion `hits / n` with its plug-in standard error.
    pub fn proportion(hits: u64, n: u64) -> Estimate {
        let p = if n > 0 { hits as f64 / n as f64 } else { f64::NAN };
        Estimate {
            value: p,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            n,
            method: Method::Direct,
            diagnostics: Diagnostics {
                zero_hits: Some(n - hits),
                ..Diagnostics::default()
            },
        }
    }

    /// `(a − b) / sqrt(se_a² + se_b²)`.
    pub fn z_against(&self, other: &Estimate) -> f64 {
        z_score(self.value - other.value, self.std_err, other.std_err)
    }
}

pub fn z_score(diff: f64, se_a: f64, se_b: f64) -> f64 {
    let se = (se_a * se_a + se_b * se_b).sqrt();
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Mean and standard error of the mean (n−1 variance).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Kish effective sample size `(Σw)² / Σw²`.
pub fn kish_ess(ws: &[f64]) -> f64 {
    let s: f64 = ws.iter().sum();
    let s2: f64 = ws.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}
