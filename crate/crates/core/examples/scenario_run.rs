//! Runs the bundled scenario file and lists the files it wrote with their digests.

use std::path::Path;

use tubebbm::cli::scenario::{run_scenario, Scenario};

fn main() -> tubebbm::Result<()> {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/example1.toml");
    let mut s = Scenario::load(&file)?;
    s.output.dir = std::env::temp_dir().join("tubebbm-example1");
    let m = run_scenario(&s, file.parent().unwrap())?;
    for f in &m.files {
        println!("{} {:>8} {}", f.sha256, f.bytes, f.path);
    }
    println!("{} verdicts passed, {} failed", m.passed, m.failed);
    Ok(())
}
