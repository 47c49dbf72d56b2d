//! Sign of `S` for a few catalog tubes.

use tubebbm::estimators::classify_regime;
use tubebbm::path::builtin;

fn main() -> tubebbm::Result<()> {
    let cases = [
        (builtin("linear_const", &[("lambda", 0.0), ("L", 2.0)])?, 1.0),
        (builtin("critical_line", &[("r", 0.5), ("L", 1.0)])?, 0.5),
        (builtin("linear_power", &[("lambda", 0.5), ("beta", 0.5), ("c", 1.0)])?, 0.2),
        (builtin("betaex", &[("alpha", 1.0), ("beta", 0.25), ("gamma", 1.0), ("r", 0.5)])?, 0.5),
    ];
    for (spec, r) in &cases {
        let rep = classify_regime(spec, *r, &[1e2, 1e3, 1e4])?;
        println!(
            "{} at r={r}: {:?}, S in [{:.5}, {:.5}]{}",
            spec.name(),
            rep.classification,
            rep.s_bracket.0,
            rep.s_bracket.1,
            rep.note.map(|n| format!(" ({n})")).unwrap_or_default()
        );
    }
    Ok(())
}
