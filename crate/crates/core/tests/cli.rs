use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn tubebbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubebbm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const LC: &str = "builtin:linear_const:lambda=0.5,L=1";

#[test]
fn rates_csv_has_header_and_full_precision() {
    let o = tubebbm(&["rates", "--spec", LC, "--r", "1", "--t-max", "10", "--grid", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,R,E,runinf,R_over_t"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0], 0.0);
    let slope = 1.0 - 0.125 - std::f64::consts::PI.powi(2) / 8.0;
    for row in &rows {
        assert_eq!(row.len(), 5);
        assert!((row[1] - slope * row[0]).abs() < 1e-9 * (1.0 + row[0]));
    }
    let mantissa = text.lines().nth(2).unwrap().split(',').nth(1).unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
}

#[test]
fn simulate_writes_tree_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = ["simulate", "--spec", LC, "--r", "1", "--replicates", "5", "--horizon", "0.5", "--seed", "3", "--out-dir", d];
    let o = tubebbm(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("simulate.jsonl")).unwrap();
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row["replicate"], i as u64);
        for key in ["extinction_time", "capped", "counts"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
    }
    let again = tubebbm(&args);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("simulate.jsonl")).unwrap(), text);
}

#[test]
fn spine_emits_requested_columns() {
    let o = tubebbm(&["spine", "--spec", LC, "--r", "1", "--replicates", "2", "--horizon", "0.2", "--emit", "zeta"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().next(), Some("replicate,t,zeta,spine_weight"));
}

#[test]
fn exit_codes() {
    let bad_spec = tubebbm(&["rates", "--spec", "builtin:nosuch", "--r", "1"]);
    assert_eq!(bad_spec.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&bad_spec.stderr).unwrap();
    assert_eq!(err["error"], "config-error");
    assert_eq!(err["exit_code"], 2);

    assert_eq!(tubebbm(&["accept", "smkoe"]).status.code(), Some(2));
    assert_eq!(tubebbm(&["rates", "--spec", LC]).status.code(), Some(2));

    let growth = tubebbm(&["verify", "--suite", "growth", "--spec", "builtin:linear_const:lambda=0,L=1", "--r", "0.2"]);
    assert_eq!(growth.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&growth.stderr).unwrap();
    assert_eq!(err["error"], "numeric-error");

    let ok = tubebbm(&["verify", "--suite", "regime", "--spec", LC, "--r", "1"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("PASS regime"));
}

fn write_scenario(dir: &Path, out: &Path, spec: &str) -> std::path::PathBuf {
    let text = format!(
        r#"name = "small"
seed = 5
spec = "{spec}"
r = 0.5
analyses = ["rates", "survival", "regime"]

[sim]
dt = 1e-3
horizon = 1.0
replicates = 300

[rates]
t_max = 10.0
points = 16

[survival]
times = [0.5, 1.0]
importance_replicates = 100

[output]
dir = "{}"
"#,
        out.display()
    );
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn scenario_run_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let file = write_scenario(tmp.path(), &a, "builtin:linear_const:lambda=0,L=1");
    let o = tubebbm(&["run", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    let files = manifest["files"].as_array().unwrap();
    assert!(files.len() >= 3);
    for f in files {
        let bytes = fs::read(a.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"], bytes.len() as u64);
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(f["sha256"], digest);
    }

    let o = tubebbm(&["run", file.to_str().unwrap(), "--out-dir", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["rates.csv", "survival.jsonl", "verdicts.jsonl"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn scenario_with_unknown_builtin_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_scenario(tmp.path(), &tmp.path().join("out"), "builtin:nosuch");
    assert_eq!(tubebbm(&["run", file.to_str().unwrap()]).status.code(), Some(2));
}
