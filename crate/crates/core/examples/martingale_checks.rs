//! Flatness of the additive martingale `Z` and the single-particle `ζ`, and the many-to-one identity.

use tubebbm::estimators::{many_to_one_check, martingale_test, z_sample, zeta_single_sample};
use tubebbm::path::builtin;
use tubebbm::sim::SimParams;

fn main() -> tubebbm::Result<()> {
    let spec = builtin("linear_const", &[("lambda", 1.0), ("L", 1.0)])?;
    let p = SimParams::new(1.0, 1e-3, 2.0).with_seed(4).with_replicates(2000).with_record_grid(vec![0.0, 1.0, 2.0]);
    for (name, sample) in [("Z", z_sample(&spec, &p)?), ("zeta", zeta_single_sample(&spec, &p)?)] {
        let rep = martingale_test(&sample)?;
        println!("{name}: means {:?}, z {:?}, pass {}", rep.means, rep.z, rep.pass);
    }
    let m = many_to_one_check(&spec, &p, 2.0)?;
    println!("E|N(2)| = {:.4} ± {:.4}, e^2 P(single) = {:.4} ± {:.4}, z {:.2}", m.lhs.value, m.lhs.std_err, m.rhs.value, m.rhs.std_err, m.z);
    Ok(())
}
