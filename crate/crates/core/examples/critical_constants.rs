//! Predicted normalisations on the critical families, set against the computed functionals.
//!
//! Below the threshold `log P(survival)` tracks `R(t)`; above it `log |N̂(t)|` tracks `R(t) + E(t)`.

use std::collections::BTreeMap;

use tubebbm::path::builtin;
use tubebbm::rates::{critical_predictions, error_budget, rate_integral, CriticalFamily, CriticalRegime};

fn main() -> tubebbm::Result<()> {
    for beta in [0.25, 0.6] {
        let kv = [("alpha", 1.0), ("beta", beta), ("gamma", 1.0), ("r", 0.5)];
        let params: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let rep = critical_predictions(CriticalFamily::BetaEx, &params)?;
        let spec = builtin("betaex", &kv)?;
        for p in &rep.predictions {
            println!("betaex beta={beta}: {:?}, normalised by t^{}, limit {:.6}", p.regime, p.exponent, p.constant);
            for t in [1e3, 1e5, 1e7] {
                let mut v = rate_integral(&spec, 0.5, t, 1e-10)?;
                if p.regime == CriticalRegime::SupercriticalBeta {
                    v += error_budget(&spec, t, 1e-10)?;
                }
                println!("  t={t:e}: {:.6}", v / t.powf(p.exponent));
            }
        }
    }
    let params: BTreeMap<String, f64> = [("alpha", 0.5), ("gamma", 1.0), ("r", 0.5)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let rep = critical_predictions(CriticalFamily::ThirdEx, &params)?;
    println!("thirdex: region {:?}, gamma thresholds {:?} {:?}", rep.region, rep.gamma0, rep.gamma1);
    Ok(())
}
