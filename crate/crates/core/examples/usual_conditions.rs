//! Heuristic checks of the standing conditions on a custom tube and on a counterexample.

use tubebbm::path::specfile::SpecFile;
use tubebbm::path::{builtin, check_usual_conditions};

const WOBBLE: &str = r#"
name = "wobble"
[expr]
f = "0.5*sin(t)"
df = "0.5*cos(t)"
ddf = "-0.5*sin(t)"
L = "2"
dL = "0"
ddL = "0"
"#;

fn main() -> tubebbm::Result<()> {
    let horizons = [1e2, 1e3, 1e4];
    let specs = [SpecFile::parse(WOBBLE)?.build()?, builtin("badex1", &[("delta", 0.1)])?];
    for spec in &specs {
        let rep = check_usual_conditions(spec, 1.0, &horizons, 0.1)?;
        println!(
            "{}: I {} II {} III {:?} IV {:?}, S in [{:.4}, {:.4}]",
            spec.name(),
            rep.c1_ok,
            rep.c2_ok,
            rep.c3_verdict,
            rep.c4_verdict,
            rep.s_bracket.0,
            rep.s_bracket.1
        );
        for (t, e) in &rep.e_over_t {
            println!("  E(t)/t at {t:e}: {e:.3e}");
        }
    }
    Ok(())
}
