//! `R(t)`, `E(t)` and the running infimum of `R` for a drifting tube, plus the `S` bracket.

use tubebbm::path::builtin;
use tubebbm::rates::{estimate_s, linear_grid, RateCurve};

fn main() -> tubebbm::Result<()> {
    let spec = builtin("sinelog", &[("lambda", 0.5), ("L", 1.0)])?;
    let r = 1.0;
    let curve = RateCurve::build(&spec, r, &linear_grid(50.0, 10), 1e-9)?;
    println!("{:>8} {:>12} {:>10} {:>12}", "t", "R", "E", "inf R");
    for i in 0..curve.grid.len() {
        println!("{:8.2} {:12.6} {:10.6} {:12.6}", curve.grid[i], curve.rate[i], curve.budget[i], curve.runinf[i]);
    }
    let (lo, hi) = estimate_s(&spec, r, &[1e2, 1e3, 1e4])?;
    println!("S in [{lo:.6}, {hi:.6}]");
    Ok(())
}
