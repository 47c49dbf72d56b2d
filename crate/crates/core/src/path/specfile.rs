//! Reading tube specs from TOML files or `builtin:` strings.
//!
//! A builtin spec file:
//!
//! ```toml
//! name = "example-1"
//! family = "linear_const"
//! [params]
//! lambda = 1.0
//! L = 2.0
//! ```
//!
//! A custom spec file gives all six evaluators as expressions:
//!
//! ```toml
//! name = "wobble"
//! [expr]
//! f = "0.5*sin(t)"
//! df = "0.5*cos(t)"
//! ddf = "-0.5*sin(t)"
//! L = "2"
//! dL = "0"
//! ddL = "0"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::catalog::builtin_from_map;
use super::{PathSpec, SpecSource};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub source: SpecSource,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<SpecFile> {
        toml::from_str(text).map_err(|e| Error::Config(format!("spec file: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("spec file: {e}")))
    }

    pub fn build(&self) -> Result<PathSpec> {
        let spec = build_source(&self.source)?;
        Ok(match &self.name {
            Some(n) => spec.with_name(n.clone()),
            None => spec,
        })
    }
}

pub fn build_source(source: &SpecSource) -> Result<PathSpec> {
    match source {
        SpecSource::Builtin { family, params } => builtin_from_map(family, params),
        SpecSource::Custom { exprs } => exprs.compile("custom"),
    }
}

/// Parse `builtin:<family>[:k=v,k=v...]`.
pub fn parse_builtin_ref(s: &str) -> Result<SpecSource> {
    let rest = s
        .strip_prefix("builtin:")
        .ok_or_else(|| Error::Config(format!("not a builtin reference: {s:?}")))?;
    let (family, args) = match rest.split_once(':') {
        Some((f, a)) => (f, a),
        None => (rest, ""),
    };
    let mut params = BTreeMap::new();
    for kv in args.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {kv:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("parameter {k}: {v:?} is not a number")))?;
        params.insert(k.trim().to_string(), v);
    }
    Ok(SpecSource::Builtin {
        family: family.to_string(),
        params,
    })
}

/// Resolve a `--spec` argument: either `builtin:...` or a path to a spec file.
pub fn resolve_spec(arg: &str) -> Result<PathSpec> {
    if arg.starts_with("builtin:") {
        return build_source(&parse_builtin_ref(arg)?);
    }
    load_spec_file(Path::new(arg))
}

pub fn load_spec_file(path: &Path) -> Result<PathSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read spec file {}: {e}", path.display())))?;
    SpecFile::parse(&text)?.build()
}
