//! Scenario files: one TOML document naming a tube, a branching rate, the
//! simulation settings and the analyses to run.
//!
//! ```toml
//! seed = 7
//! spec = "builtin:linear_const:lambda=0,L=1"
//! r = 0.2
//! analyses = ["rates", "survival", "martingale"]
//!
//! [sim]
//! dt = 1e-3
//! horizon = 5.0
//! replicates = 2000
//!
//! [survival]
//! times = [1.0, 3.0, 5.0]
//!
//! [output]
//! dir = "out/example1"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::output::Sink;
use super::verify::{run_suite, Suite, SuiteVerdict, VerifyParams};
use super::{grid_points, write_rates, GridSpec};
use crate::error::{Error, Result};
use crate::estimators::{survival_decay_ratio, survival_importance};
use crate::path::specfile::resolve_spec;
use crate::path::PathSpec;
use crate::rates::RateCurve;
use crate::sim::{survival_direct, SimParams};
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    /// `R`, `E` and the running infimum on a grid, to the rates CSV.
    Rates,
    /// Direct and importance-sampled survival at the survival times.
    Survival,
    Martingale,
    Manytoone,
    Gineq,
    Growth,
    Regime,
    Occupation,
}

impl Analysis {
    fn suite(self) -> Option<Suite> {
        match self {
            Analysis::Rates | Analysis::Survival => None,
            Analysis::Martingale => Some(Suite::Martingale),
            Analysis::Manytoone => Some(Suite::Manytoone),
            Analysis::Gineq => Some(Suite::Gineq),
            Analysis::Growth => Some(Suite::Growth),
            Analysis::Regime => Some(Suite::Regime),
            Analysis::Occupation => Some(Suite::Occupation),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub horizon: f64,
    pub cap: usize,
    pub replicates: u64,
    pub x0: f64,
    pub bridge: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: 1e-3,
            horizon: 1.0,
            cap: 1_000_000,
            replicates: 1000,
            x0: 0.0,
            bridge: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesSection {
    /// Defaults to the simulation horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    pub points: usize,
    pub geometric: bool,
    pub tol: f64,
}

impl Default for RatesSection {
    fn default() -> Self {
        RatesSection {
            t_max: None,
            t_min: None,
            points: 256,
            geometric: false,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurvivalSection {
    /// Defaults to the simulation horizon alone.
    pub times: Vec<f64>,
    /// Trees under `Q` per time; defaults to the simulation replicate count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub importance_replicates: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    #[serde(default = "names::rates")]
    pub rates: String,
    #[serde(default = "names::survival")]
    pub survival: String,
    #[serde(default = "names::verdicts")]
    pub verdicts: String,
    #[serde(default = "names::manifest")]
    pub manifest: String,
}

mod names {
    pub fn rates() -> String {
        "rates.csv".into()
    }
    pub fn survival() -> String {
        "survival.jsonl".into()
    }
    pub fn verdicts() -> String {
        "verdicts.jsonl".into()
    }
    pub fn manifest() -> String {
        "manifest.json".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub seed: u64,
    /// `builtin:family:k=v,...` or a spec file path, relative to the scenario file.
    pub spec: String,
    pub r: f64,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub survival: SurvivalSection,
    pub output: OutputSection,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.analyses.is_empty() {
            return Err(Error::Config("scenario requests no analyses".into()));
        }
        if !(self.r >= 0.0) {
            return Err(Error::Config(format!("branching rate {} must be non-negative", self.r)));
        }
        self.sim_params().validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Resolves the spec reference; file paths are taken relative to `base`.
    pub fn resolve_spec(&self, base: &Path) -> Result<PathSpec> {
        if self.spec.starts_with("builtin:") {
            return resolve_spec(&self.spec);
        }
        let p = Path::new(&self.spec);
        let p = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        resolve_spec(&p.to_string_lossy())
    }

    fn sim_params(&self) -> SimParams {
        let mut p = SimParams::new(self.r, self.sim.dt, self.sim.horizon)
            .with_seed(self.seed)
            .with_replicates(self.sim.replicates)
            .with_cap(self.sim.cap);
        p.x0 = self.sim.x0;
        p.bridge = self.sim.bridge;
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one scenario run. Everything except `wall_times` is a function
/// of the scenario alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: Scenario,
    pub versions: BTreeMap<String, String>,
    pub seed: u64,
    pub threads: usize,
    pub files: Vec<FileEntry>,
    pub passed: usize,
    pub failed: usize,
    pub wall_times: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

/// One line of the survival output.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct SurvivalRecord {
    t: f64,
    direct: Estimate,
    importance: Estimate,
    z: f64,
    runinf: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    decay_ratio: Option<f64>,
}

fn digest(path: &Path) -> Result<FileEntry> {
    let bytes = std::fs::read(path)?;
    Ok(FileEntry {
        path: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: format!("{:x}", Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

fn survival(s: &Scenario, spec: &PathSpec, sink: &mut Sink) -> Result<Vec<SuiteVerdict>> {
    let p = s.sim_params();
    let times = if s.survival.times.is_empty() { vec![p.horizon] } else { s.survival.times.clone() };
    let pi = p.clone().with_replicates(s.survival.importance_replicates.unwrap_or(p.replicates));
    let curve = RateCurve::build(spec, s.r, &times, 1e-9)?;
    let mut verdicts = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let direct = survival_direct(spec, &p, t)?;
        let importance = survival_importance(spec, &pi, t)?;
        let z = direct.z_against(&importance);
        let runinf = curve.runinf[k];
        let decay_ratio = if runinf < 0.0 && importance.value > 0.0 && importance.value < 1.0 {
            survival_decay_ratio(&[(t, importance.clone())], &curve)?.first().map(|d| d.ratio)
        } else {
            None
        };
        let pass = z.abs() <= 3.0;
        let mut v = SuiteVerdict {
            suite: Suite::Survival,
            check: format!("P(survive {t})"),
            pass,
            detail: format!(
                "direct {:.5}±{:.5} vs importance {:.5}±{:.5}, z={z:.2}",
                direct.value, direct.std_err, importance.value, importance.std_err
            ),
            metrics: BTreeMap::new(),
        };
        v.metrics.insert("z".into(), z);
        verdicts.push(v);
        sink.json(&SurvivalRecord {
            t,
            direct,
            importance,
            z,
            runinf,
            decay_ratio,
        })?;
    }
    Ok(verdicts)
}

/// Runs every analysis of `s`, writing its outputs and the manifest under the
/// output directory. `base` anchors a relative spec file path.
pub fn run_scenario(s: &Scenario, base: &Path) -> Result<Manifest> {
    s.validate()?;
    let spec = s.resolve_spec(base)?;
    let dir = s.output.dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let mut wall_times = BTreeMap::new();
    let mut written: Vec<PathBuf> = Vec::new();
    let mut verdicts: Vec<SuiteVerdict> = Vec::new();
    let mut analyses = s.analyses.clone();
    analyses.dedup();

    for a in analyses {
        let start = Instant::now();
        let key = serde_json::to_value(a).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        match a {
            Analysis::Rates => {
                let grid = grid_points(
                    if s.rates.geometric { GridSpec::Geometric(s.rates.points) } else { GridSpec::Linear(s.rates.points) },
                    s.rates.t_min,
                    s.rates.t_max.unwrap_or(s.sim.horizon),
                )?;
                let curve = RateCurve::build(&spec, s.r, &grid, s.rates.tol)?;
                let mut sink = Sink::open(Some(dir), &s.output.rates)?;
                write_rates(&mut sink, &curve)?;
                written.extend(sink.finish()?);
            }
            Analysis::Survival => {
                let mut sink = Sink::open(Some(dir), &s.output.survival)?;
                verdicts.extend(survival(s, &spec, &mut sink)?);
                written.extend(sink.finish()?);
            }
            other => {
                let suite = other.suite().expect("non-suite analyses are handled above");
                let v = VerifyParams {
                    r: s.r,
                    seed: s.seed,
                    replicates: s.sim.replicates,
                    horizon: s.sim.horizon,
                    dt: s.sim.dt,
                    cap: s.sim.cap,
                };
                verdicts.extend(run_suite(suite, &spec, &v)?);
            }
        }
        wall_times.insert(key, start.elapsed().as_secs_f64());
    }
    if !verdicts.is_empty() {
        let mut sink = Sink::open(Some(dir), &s.output.verdicts)?;
        for v in &verdicts {
            sink.json(v)?;
        }
        written.extend(sink.finish()?);
    }
    written.dedup();

    let files = written.iter().map(|p| digest(p)).collect::<Result<Vec<_>>>()?;
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    let manifest = Manifest {
        scenario: s.clone(),
        versions: BTreeMap::from([("tubebbm".to_string(), env!("CARGO_PKG_VERSION").to_string())]),
        seed: s.seed,
        threads: rayon::current_num_threads(),
        files,
        passed: verdicts.len() - failed,
        failed,
        wall_times,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Input(e.to_string()))?;
    std::fs::write(dir.join(&s.output.manifest), text + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
seed = 3
spec = "builtin:linear_const:lambda=0,L=1"
r = 0.5
analyses = ["rates", "regime"]

[sim]
horizon = 2.0

[output]
dir = "out"
"#;

    #[test]
    fn round_trip() {
        let s = Scenario::parse(TEXT).unwrap();
        assert_eq!(s.sim.dt, 1e-3);
        assert_eq!(s.output.rates, "rates.csv");
        let again = Scenario::parse(&s.to_toml().unwrap()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(matches!(Scenario::parse("seed = 1"), Err(Error::Config(_))));
        let no_seed = TEXT.replace("seed = 3", "");
        assert!(matches!(Scenario::parse(&no_seed), Err(Error::Config(_))));
        let unknown = TEXT.replace("analyses = [\"rates\", \"regime\"]", "analyses = [\"rates\", \"plots\"]");
        assert!(matches!(Scenario::parse(&unknown), Err(Error::Config(_))));
        let empty = TEXT.replace("analyses = [\"rates\", \"regime\"]", "analyses = []");
        assert!(matches!(Scenario::parse(&empty), Err(Error::Config(_))));
    }
}
