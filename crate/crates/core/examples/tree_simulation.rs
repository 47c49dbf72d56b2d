//! Forward simulation of the killed branching process: population counts and survival.

use tubebbm::path::builtin;
use tubebbm::sim::{run_trees, survival_direct, SimParams};
use tubebbm::stats::mean_se;

fn main() -> tubebbm::Result<()> {
    let spec = builtin("linear_const", &[("lambda", 0.5), ("L", 1.5)])?;
    let grid = vec![0.0, 1.0, 2.0, 3.0];
    let p = SimParams::new(1.0, 1e-3, 3.0).with_seed(7).with_replicates(2000).with_record_grid(grid.clone());
    let runs = run_trees(&spec, &p)?;
    for (j, t) in grid.iter().enumerate() {
        let n: Vec<f64> = runs.iter().map(|r| r.counts[j].1 as f64).collect();
        let (m, se) = mean_se(&n);
        println!("t={t}: mean population {m:.3} ± {se:.3}");
    }
    let dead = runs.iter().filter(|r| r.extinction_time.is_some()).count();
    println!("extinct by t=3: {dead}/{}", runs.len());
    let s = survival_direct(&spec, &p, 3.0)?;
    println!("P(alive at 3) = {:.4} ± {:.4}", s.value, s.std_err);
    Ok(())
}
