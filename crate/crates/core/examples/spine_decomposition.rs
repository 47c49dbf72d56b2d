//! A spine under the tilted measure, its single-particle martingale, and the conditional mean of `Z`.

use tubebbm::path::builtin;
use tubebbm::sim::SimParams;
use tubebbm::spine::{decomposition_bound, simulate_q_tree, simulate_spine, spine_decomposition_rhs};

fn main() -> tubebbm::Result<()> {
    let spec = builtin("linear_const", &[("lambda", 0.5), ("L", 1.0)])?;
    let (r, t) = (1.0, 2.0);
    let p = SimParams::new(r, 1e-3, t).with_seed(3).with_record_grid(vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    let run = simulate_spine(&spec, &p, 0, false)?;
    println!("spine births: {}", run.generation());
    for (k, &(s, z)) in run.zeta_series.iter().enumerate() {
        println!("  t={s}: zeta {z:.4}, log weight {:.4}", run.log_tilde_weight(k));
    }
    let bound = decomposition_bound(&spec, r, t, 0.0, 1000)?;
    let tree = simulate_q_tree(&spec, &p, 0, true)?;
    for ((s, z), (_, rhs)) in tree.z_series.as_ref().unwrap().iter().zip(spine_decomposition_rhs(&tree)?) {
        println!("  t={s}: Z {z:.4}, E[Z | spine] {rhs:.4} (bound {bound:.4})");
    }
    Ok(())
}
