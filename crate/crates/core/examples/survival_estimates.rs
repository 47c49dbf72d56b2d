//! Direct against importance-sampled survival, and the decay ratio against the running infimum of `R`.

use tubebbm::estimators::{survival_decay_ratio, survival_importance};
use tubebbm::path::builtin;
use tubebbm::rates::{linear_grid, RateCurve};
use tubebbm::sim::{survival_direct, SimParams};

fn main() -> tubebbm::Result<()> {
    let spec = builtin("linear_const", &[("lambda", 0.0), ("L", 1.0)])?;
    let r = 0.2;
    let curve = RateCurve::build(&spec, r, &linear_grid(4.0, 8), 1e-9)?;
    let mut est = Vec::new();
    for t in [1.0, 2.0, 4.0] {
        let p = SimParams::new(r, 1e-3, t).with_seed(1);
        let d = survival_direct(&spec, &p.clone().with_replicates(10_000), t)?;
        let i = survival_importance(&spec, &p.with_replicates(1000), t)?;
        println!("t={t}: direct {:.4} ± {:.4}, importance {:.4} ± {:.4}", d.value, d.std_err, i.value, i.std_err);
        est.push((t, i));
    }
    for pt in survival_decay_ratio(&est, &curve)? {
        println!("t={}: log P / inf R = {:.3}", pt.t, pt.ratio);
    }
    Ok(())
}
