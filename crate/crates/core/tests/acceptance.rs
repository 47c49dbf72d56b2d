//! A1–A15 at their stated sizes and tolerances; one PASS/FAIL line per criterion.
//!
//! Positional arguments select criteria by id (`cargo test --test acceptance -- A5 A9`).

use tubebbm::acceptance::{run_acceptance, AcceptConfig, Budget};

fn main() {
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let cfg = AcceptConfig::new(Budget::Full);
    let results = run_acceptance(&cfg, &only, |r| {
        println!("{} {:<4} {} ({:.1}s)", if r.pass { "PASS" } else { "FAIL" }, r.id, r.summary, r.seconds);
    });
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
