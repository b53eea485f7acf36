use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::greedy::{DEFAULT_EPS, DEFAULT_J_MAX};
use crate::linalg::{EigenOptions, DEFAULT_EIG_TOL};
use crate::lp::DEFAULT_LP_TOL;
use crate::scm::DEFAULT_TRAINING_SIZE;

/// Dense oracle values are computed only up to this dimension.
pub const ORACLE_CAP: usize = 800;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunPipeline {
    /// Classical method.
    Scm,
    /// Subspace method, certified selection.
    #[default]
    Subspace,
    /// Subspace method, selection by the residual ratio.
    SubspaceHeuristic,
}

impl RunPipeline {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunPipeline::Scm => "scm",
            RunPipeline::Subspace => "subspace",
            RunPipeline::SubspaceHeuristic => "subspace-heuristic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: RunPipeline,
    /// Problem manifest; exactly one of `manifest` and `generator` is set.
    pub manifest: Option<PathBuf>,
    pub generator: Option<String>,
    pub eps: f64,
    pub j_max: usize,
    pub xi_size: usize,
    pub xi_seed: u64,
    pub ell: usize,
    /// `None` means `min(Q, Jℓ)`.
    pub r_max: Option<usize>,
    pub eig_tol: f64,
    pub eig_seed: u64,
    pub lp_tol: f64,
    pub warm_start: bool,
    /// Cross-check every training point against a dense eigensolver (`N ≤ 800`).
    pub oracle: bool,
    pub lazy: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipeline: RunPipeline::default(),
            manifest: None,
            generator: None,
            eps: DEFAULT_EPS,
            j_max: DEFAULT_J_MAX,
            xi_size: DEFAULT_TRAINING_SIZE,
            xi_seed: 1,
            ell: 1,
            r_max: None,
            eig_tol: DEFAULT_EIG_TOL,
            eig_seed: EigenOptions::default().seed,
            lp_tol: DEFAULT_LP_TOL,
            warm_start: true,
            oracle: false,
            lazy: false,
            threads: None,
        }
    }
}

impl RunConfig {
    /// Replaces every field set in the JSON object at `path`.
    pub fn with_file(&self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let overrides: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Manifest { field: "$".into(), message: format!("invalid config JSON: {e}") })?;
        self.merged(overrides)
    }

    pub fn merged(&self, overrides: Value) -> Result<Self> {
        let Value::Object(map) = overrides else {
            return Err(Error::Manifest { field: "$".into(), message: "config must be a JSON object".into() });
        };
        let mut base = serde_json::to_value(self).map_err(|e| Error::Internal(e.to_string()))?;
        let fields = base.as_object_mut().expect("struct serializes to an object");
        for (k, v) in map {
            if !fields.contains_key(&k) {
                return Err(Error::Manifest { field: k, message: "unknown config field".into() });
            }
            let probe = {
                let mut one = fields.clone();
                one.insert(k.clone(), v.clone());
                serde_json::from_value::<RunConfig>(Value::Object(one))
            };
            if let Err(e) = probe {
                return Err(Error::Manifest { field: k, message: e.to_string() });
            }
            fields.insert(k, v);
        }
        serde_json::from_value(base).map_err(|e| Error::Manifest { field: "$".into(), message: e.to_string() })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| Err(Error::Manifest { field: field.into(), message });
        match (&self.manifest, &self.generator) {
            (None, None) => return bad("manifest", "give a manifest or a generator spec".into()),
            (Some(_), Some(_)) => {
                return bad("generator", "give either a manifest or a generator spec, not both".into())
            }
            _ => {}
        }
        if !(self.eps >= 0.0) {
            return bad("eps", format!("must be nonnegative, got {}", self.eps));
        }
        if self.xi_size == 0 {
            return bad("xi_size", "must be positive".into());
        }
        if self.ell == 0 {
            return bad("ell", "must be at least 1".into());
        }
        if !(self.eig_tol > 0.0) {
            return bad("eig_tol", format!("must be positive, got {}", self.eig_tol));
        }
        if !(self.lp_tol > 0.0) {
            return bad("lp_tol", format!("must be positive, got {}", self.lp_tol));
        }
        if self.threads == Some(0) {
            return bad("threads", "must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_protocol() {
        let c = RunConfig::default();
        assert_eq!((c.eps, c.j_max, c.xi_size, c.ell), (1e-4, 200, 1000, 1));
        assert_eq!((c.eig_tol, c.lp_tol), (1e-6, 1e-8));
        assert!(c.warm_start && c.r_max.is_none());
    }

    #[test]
    fn file_values_override() {
        let c = RunConfig { eps: 1e-2, ..Default::default() };
        let m = c.merged(serde_json::json!({"j_max": 7, "pipeline": "scm"})).unwrap();
        assert_eq!((m.eps, m.j_max, m.pipeline), (1e-2, 7, RunPipeline::Scm));
        let e = c.merged(serde_json::json!({"jmax": 7})).unwrap_err();
        assert_eq!(e.field(), Some("jmax"));
        let e = c.merged(serde_json::json!({"eps": "small"})).unwrap_err();
        assert_eq!(e.field(), Some("eps"));
    }
}
