//! Tube specifications: a centre path `f` and a half-width `L`, each with
//! exact first and second derivatives.

mod catalog;
mod conditions;
pub mod expr;
pub mod specfile;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Component, Error, Result};

pub use catalog::{builtin, family_names, nondiff_exact, Family};
pub use conditions::{
    check_usual_conditions, fd_errors, ConditionsConfig, UsualConditionsReport, Verdict,
};

/// The six evaluator values of a tube at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
    pub l: f64,
    pub dl: f64,
    pub ddl: f64,
}

impl PathPoint {
    pub fn components(&self) -> [(Component, f64); 6] {
        [
            (Component::F, self.f),
            (Component::DF, self.df),
            (Component::DDF, self.ddf),
            (Component::L, self.l),
            (Component::DL, self.dl),
            (Component::DDL, self.ddl),
        ]
    }

    /// Signed offset from the centre scaled to the half-width, in (-1, 1) inside the tube.
    #[inline]
    pub fn relative(&self, y: f64) -> f64 {
        (y - self.f) / self.l
    }

    #[inline]
    pub fn contains(&self, y: f64) -> bool {
        (y - self.f).abs() < self.l
    }
}

/// Anything that can evaluate a tube with derivatives.
pub trait TubeProfile: Send + Sync + fmt::Debug {
    fn point(&self, t: f64) -> PathPoint;

    /// Local feature scale near `t`. Quadrature panels are kept below it.
    fn resolution(&self, _t: f64) -> Option<f64> {
        None
    }

    /// Times in `[0, t_end]` where the profile changes character quickly.
    fn breakpoints(&self, _t_end: f64) -> Vec<f64> {
        Vec::new()
    }
}

/// Where a spec came from; enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecSource {
    Builtin {
        family: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Custom {
        #[serde(rename = "expr")]
        exprs: expr::ExprSet,
    },
}

/// An immutable, shareable tube specification.
#[derive(Clone)]
pub struct PathSpec {
    name: String,
    source: SpecSource,
    profile: Arc<dyn TubeProfile>,
}

impl fmt::Debug for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathSpec")
            .field("name", &self.name)
            .field("source", &self.source)
            .finish()
    }
}

impl PathSpec {
    pub fn new(name: impl Into<String>, source: SpecSource, profile: Arc<dyn TubeProfile>) -> Self {
        Self {
            name: name.into(),
            source,
            profile,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn source(&self) -> &SpecSource {
        &self.source
    }

    pub fn profile(&self) -> &dyn TubeProfile {
        &*self.profile
    }

    /// Unchecked evaluation, for hot loops.
    #[inline]
    pub fn point(&self, t: f64) -> PathPoint {
        self.profile.point(t)
    }

    pub fn resolution(&self, t: f64) -> Option<f64> {
        self.profile.resolution(t)
    }

    pub fn breakpoints(&self, t_end: f64) -> Vec<f64> {
        self.profile.breakpoints(t_end)
    }

    /// Whether usual condition (I), `f(0) = 0`, holds.
    pub fn starts_at_origin(&self) -> bool {
        self.point(0.0).f.abs() <= 1e-12
    }
}

/// Evaluate all six components at `t`, rejecting non-finite output.
pub fn eval_path(spec: &PathSpec, t: f64) -> Result<PathPoint> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("eval_path needs finite t >= 0, got {t}")));
    }
    let p = spec.point(t);
    for (component, v) in p.components() {
        if !v.is_finite() {
            return Err(Error::Evaluation { t, component });
        }
    }
    if p.l <= 0.0 {
        return Err(Error::Domain(format!("tube half-width L({t}) = {} is not positive", p.l)));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Broken;
    impl TubeProfile for Broken {
        fn point(&self, t: f64) -> PathPoint {
            PathPoint {
                f: 0.0,
                df: 0.0,
                ddf: if t > 1.0 { f64::NAN } else { 0.0 },
                l: 1.0,
                dl: 0.0,
                ddl: 0.0,
            }
        }
    }

    fn broken() -> PathSpec {
        PathSpec::new(
            "broken",
            SpecSource::Builtin {
                family: "broken".into(),
                params: BTreeMap::new(),
            },
            Arc::new(Broken),
        )
    }

    #[test]
    fn non_finite_component_is_reported() {
        let s = broken();
        assert!(eval_path(&s, 0.5).is_ok());
        match eval_path(&s, 2.0) {
            Err(Error::Evaluation { t, component }) => {
                assert_eq!(t, 2.0);
                assert_eq!(component, Component::DDF);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_time_rejected() {
        assert!(matches!(eval_path(&broken(), -1.0), Err(Error::Domain(_))));
    }
}
