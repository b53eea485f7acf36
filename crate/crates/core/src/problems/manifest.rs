//! JSON problem manifests and generator specifications.
//!
//! ```json
//! {"Q": 2, "P": 1, "domain": [[0, 3.14159]], "theta": ["cos(mu1)", "sin(mu1)"],
//!  "terms": ["a1.mtx", "a2.mtx"], "pipeline": "eig"}
//! ```
//!
//! Term paths are resolved relative to the manifest's directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::expr::{parse_theta, Expr};
use super::generators::*;
use super::transforms::{coercivity_transform, singular_value_expansion, GeneralizedProblem};
use crate::error::{Error, Result};
use crate::linalg::{
    read_matrix_market, write_matrix_market, CsrMatrix, GeneralMatrix, HermitianOperator, MtxFile, MtxSymmetry,
};
use crate::scm::AffineFamily;

/// Largest symmetry defect (relative) accepted for a term file.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// Smallest eigenvalue of `A(μ)`.
    #[default]
    Eig,
    /// Smallest generalized eigenvalue of `(A(μ), X)`.
    Coercivity,
    /// Smallest singular value of `A(μ)` in the `X` norm, squared.
    Singular,
}

impl Pipeline {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "eig" => Some(Pipeline::Eig),
            "coercivity" => Some(Pipeline::Coercivity),
            "singular" => Some(Pipeline::Singular),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "P")]
    pub p: usize,
    pub domain: Vec<[f64; 2]>,
    pub theta: Vec<String>,
    pub terms: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inner_product: Option<String>,
    #[serde(default)]
    pub pipeline: Pipeline,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generator: Option<String>,
}

#[derive(Debug)]
pub struct LoadedProblem {
    pub family: AffineFamily,
    pub manifest: Manifest,
    pub path: PathBuf,
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Manifest { field: field.into(), message: message.into() }
}

fn in_field(field: impl Into<String>, source: Error) -> Error {
    Error::InField { field: field.into(), source: Box::new(source) }
}

fn validate(v: &Value) -> Result<Manifest> {
    const KNOWN: &[&str] = &["Q", "P", "domain", "theta", "terms", "inner_product", "pipeline", "name", "generator"];
    let obj = v.as_object().ok_or_else(|| field_err("$", "manifest must be a JSON object"))?;
    if let Some(k) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(field_err(k.clone(), "unknown field"));
    }
    let count = |name: &str| -> Result<usize> {
        let x = obj.get(name).ok_or_else(|| field_err(name, "missing"))?;
        x.as_u64()
            .map(|u| u as usize)
            .ok_or_else(|| field_err(name, format!("expected a nonnegative integer, found {x}")))
    };
    let q = count("Q")?;
    let p = count("P")?;
    if q == 0 {
        return Err(field_err("Q", "must be at least 1"));
    }
    let strings = |name: &str| -> Result<Vec<String>> {
        let arr = obj
            .get(name)
            .ok_or_else(|| field_err(name, "missing"))?
            .as_array()
            .ok_or_else(|| field_err(name, "expected an array of strings"))?;
        if arr.len() != q {
            return Err(field_err(name, format!("has {} entries but Q = {q}", arr.len())));
        }
        arr.iter()
            .enumerate()
            .map(|(k, s)| {
                s.as_str().map(str::to_string).ok_or_else(|| field_err(format!("{name}[{k}]"), "expected a string"))
            })
            .collect()
    };
    let theta = strings("theta")?;
    let terms = strings("terms")?;
    let dom = obj
        .get("domain")
        .ok_or_else(|| field_err("domain", "missing"))?
        .as_array()
        .ok_or_else(|| field_err("domain", "expected an array of [lo, hi] pairs"))?;
    if dom.len() != p {
        return Err(field_err("domain", format!("has {} intervals but P = {p}", dom.len())));
    }
    let mut domain = Vec::with_capacity(p);
    for (k, iv) in dom.iter().enumerate() {
        let pair = iv.as_array().filter(|a| a.len() == 2);
        let vals: Option<Vec<f64>> = pair.and_then(|a| a.iter().map(Value::as_f64).collect());
        match vals {
            Some(v) if v[0].is_finite() && v[1].is_finite() && v[0] <= v[1] => domain.push([v[0], v[1]]),
            _ => return Err(field_err(format!("domain[{k}]"), format!("expected [lo, hi] with lo <= hi, found {iv}"))),
        }
    }
    let inner_product = match obj.get("inner_product") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(other) => return Err(field_err("inner_product", format!("expected a path, found {other}"))),
    };
    let pipeline = match obj.get("pipeline") {
        None => Pipeline::Eig,
        Some(Value::String(s)) => Pipeline::parse(s).ok_or_else(|| {
            field_err("pipeline", format!("unknown pipeline {s:?}; expected eig, coercivity or singular"))
        })?,
        Some(other) => return Err(field_err("pipeline", format!("expected a string, found {other}"))),
    };
    if pipeline == Pipeline::Coercivity && inner_product.is_none() {
        return Err(field_err("inner_product", "required by the coercivity pipeline"));
    }
    let opt_string = |name: &str| obj.get(name).and_then(Value::as_str).map(str::to_string);
    Ok(Manifest {
        q,
        p,
        domain,
        theta,
        terms,
        inner_product,
        pipeline,
        name: opt_string("name"),
        generator: opt_string("generator"),
    })
}

/// Reads and validates a manifest, loads its term files and applies the
/// requested pipeline transform.
pub fn load_family(path: impl AsRef<Path>) -> Result<LoadedProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| field_err("$", format!("invalid JSON: {e}")))?;
    let manifest = validate(&value)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let domain: Vec<(f64, f64)> = manifest.domain.iter().map(|d| (d[0], d[1])).collect();

    let mut theta = Vec::with_capacity(manifest.q);
    for (k, s) in manifest.theta.iter().enumerate() {
        let field = format!("theta[{k}]");
        let e = parse_theta(s).map_err(|e| in_field(&field, e))?;
        if e.arity() > manifest.p {
            return Err(field_err(field, format!("uses mu{} but P = {}", e.arity(), manifest.p)));
        }
        e.probe(&domain, 100, 0x7e7a + k as u64).map_err(|e| in_field(&field, e))?;
        theta.push(e);
    }

    let mut matrices = Vec::with_capacity(manifest.q);
    let mut dim: Option<(usize, String)> = None;
    for (k, rel) in manifest.terms.iter().enumerate() {
        let field = format!("terms[{k}]");
        let file = base.join(rel);
        let mtx: MtxFile = read_matrix_market(&file).map_err(|e| in_field(&field, e))?;
        let m = mtx.matrix;
        if m.nrows() != m.ncols() {
            return Err(in_field(
                &field,
                Error::DimensionMismatch(format!("{} is {}x{}, expected square", file.display(), m.nrows(), m.ncols())),
            ));
        }
        match &dim {
            None => dim = Some((m.nrows(), file.display().to_string())),
            Some((n, first)) if *n != m.nrows() => {
                return Err(in_field(
                    &field,
                    Error::DimensionMismatch(format!(
                        "{} has dimension {} but {first} has {n}",
                        file.display(),
                        m.nrows()
                    )),
                ))
            }
            _ => {}
        }
        matrices.push(m);
    }
    let n = dim.map(|d| d.0).unwrap_or(0);

    let inner = match &manifest.inner_product {
        Some(rel) => {
            let file = base.join(rel);
            let mtx: MtxFile = read_matrix_market(&file).map_err(|e| in_field("inner_product", e))?;
            if mtx.matrix.nrows() != n || mtx.matrix.ncols() != n {
                return Err(in_field(
                    "inner_product",
                    Error::DimensionMismatch(format!(
                        "{} is {}x{}, terms have dimension {n}",
                        file.display(),
                        mtx.matrix.nrows(),
                        mtx.matrix.ncols()
                    )),
                ));
            }
            let op = HermitianOperator::from_sparse(mtx.matrix).map_err(|e| in_field("inner_product", e))?;
            check_hermitian(&op).map_err(|e| in_field("inner_product", e))?;
            Some(Arc::new(op))
        }
        None => None,
    };

    let family = match manifest.pipeline {
        Pipeline::Eig | Pipeline::Coercivity => {
            let mut terms = Vec::with_capacity(manifest.q);
            for (k, m) in matrices.into_iter().enumerate() {
                let field = format!("terms[{k}]");
                let op = HermitianOperator::from_sparse(m).map_err(|e| in_field(&field, e))?;
                check_hermitian(&op).map_err(|e| in_field(&field, e))?;
                terms.push(Arc::new(op));
            }
            let family = AffineFamily::new(terms, theta, domain)?;
            if manifest.pipeline == Pipeline::Coercivity {
                let x = inner.expect("validated");
                coercivity_transform(&GeneralizedProblem::new(family, x)?).map_err(|e| in_field("inner_product", e))?
            } else {
                family
            }
        }
        Pipeline::Singular => {
            let terms = matrices.into_iter().map(|m| Arc::new(GeneralMatrix::Sparse(m))).collect();
            let x = inner.unwrap_or_else(|| Arc::new(HermitianOperator::identity(n)));
            singular_value_expansion(terms, theta, domain, &x).map_err(|e| in_field("inner_product", e))?
        }
    };
    let label = manifest.name.clone().unwrap_or_else(|| path.display().to_string());
    Ok(LoadedProblem { family: family.with_label(label), manifest, path: path.to_path_buf() })
}

fn check_hermitian(op: &HermitianOperator) -> Result<()> {
    if op.symmetry_defect() > HERMITIAN_TOL {
        Err(Error::NotHermitian { defect: op.symmetry_defect(), tolerance: HERMITIAN_TOL })
    } else {
        Ok(())
    }
}

/// Writes `family` as `manifest.json` plus one Matrix Market file per term
/// into `dir`. Operator-form terms are materialized.
pub fn write_manifest(dir: impl AsRef<Path>, family: &AffineFamily, generator: Option<&str>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = family.q().to_string().len();
    let mut terms = Vec::with_capacity(family.q());
    for (q, t) in family.terms().iter().enumerate() {
        let name = format!("term_{:0width$}.mtx", q + 1);
        let csr = match t.storage() {
            crate::linalg::Storage::Sparse(s) => s.clone(),
            _ => CsrMatrix::from_dense(&t.to_dense()),
        };
        let mut file = MtxFile::new(csr, MtxSymmetry::Symmetric);
        file = file.with_comment(&format!(" term {} of {}", q + 1, family.label()));
        write_matrix_market(dir.join(&name), &file)?;
        terms.push(name);
    }
    let manifest = Manifest {
        q: family.q(),
        p: family.p(),
        domain: family.domain().iter().map(|&(lo, hi)| [lo, hi]).collect(),
        theta: family.theta_exprs().iter().map(Expr::to_string).collect(),
        terms,
        inner_product: None,
        pipeline: Pipeline::Eig,
        name: Some(family.label().to_string()),
        generator: generator.map(str::to_string),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// `kind:key=value,...`, e.g. `random:Q=4,N=200,delta=0.2,seed=1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub kind: String,
    pub params: BTreeMap<String, String>,
}

impl GeneratorSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let kind = kind.trim().to_string();
        let mut params = BTreeMap::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Argument(format!("generator parameter {part:?} is not key=value")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let spec = Self { kind, params };
        spec.check_keys()?;
        Ok(spec)
    }

    fn allowed(&self) -> Result<&'static [&'static str]> {
        Ok(match self.kind.as_str() {
            "random" => &["Q", "N", "delta", "seed"],
            "circle" => &[],
            "analytic" => &["N", "gap", "seed"],
            "blocks" => &["nx", "ny", "bx", "by", "lo", "hi"],
            "thermal" | "fin" | "elasticity" => &[],
            other => {
                return Err(Error::Argument(format!(
                    "unknown generator {other:?}; expected random, circle, analytic, blocks, thermal, fin or elasticity"
                )))
            }
        })
    }

    fn check_keys(&self) -> Result<()> {
        let allowed = self.allowed()?;
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Argument(format!(
                "generator {} has no parameter {k:?} (accepted: {})",
                self.kind,
                allowed.join(", ")
            )));
        }
        Ok(())
    }

    fn get<V: std::str::FromStr>(&self, key: &str, default: V) -> Result<V> {
        match self.params.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Error::Argument(format!("generator parameter {key}={s:?} is not valid"))),
        }
    }

    pub fn build(&self) -> Result<AffineFamily> {
        match self.kind.as_str() {
            "random" => make_random_family(
                self.get("Q", 4)?,
                self.get("N", 200)?,
                self.get("delta", 0.2)?,
                self.get("seed", 1)?,
            ),
            "circle" => Ok(make_example_2_3()),
            "analytic" => make_1param_analytic(self.get("N", 100)?, self.get("gap", 1.0)?, self.get("seed", 1)?),
            "blocks" => make_block_diffusion(
                self.get("nx", 16)?,
                self.get("ny", 16)?,
                self.get("bx", 2)?,
                self.get("by", 2)?,
                self.get("lo", 0.1)?,
                self.get("hi", 0.5)?,
            ),
            "thermal" => make_thermal_block_standin(),
            "fin" => make_fin_standin(),
            "elasticity" => make_elasticity_standin(),
            _ => Err(self.allowed().expect_err("unknown kind")),
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { ':' } else { ',' })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_spec_round_trip() {
        let s = GeneratorSpec::parse("random:Q=3,N=20,delta=0.1,seed=7").unwrap();
        assert_eq!(s.to_string(), "random:N=20,Q=3,delta=0.1,seed=7");
        let f = s.build().unwrap();
        assert_eq!((f.q(), f.dim()), (3, 20));
        assert!(GeneratorSpec::parse("random:K=3").is_err());
        assert!(GeneratorSpec::parse("nope").is_err());
        assert_eq!(GeneratorSpec::parse("circle").unwrap().build().unwrap().dim(), 2);
    }

    #[test]
    fn validation_names_fields() {
        let bad =
            serde_json::json!({"Q": 1, "P": 1, "domain": [[0, 1]], "theta": ["1"], "terms": ["a"], "pipeline": "x"});
        match validate(&bad) {
            Err(Error::Manifest { field, .. }) => assert_eq!(field, "pipeline"),
            other => panic!("{other:?}"),
        }
        let bad = serde_json::json!({"Q": 2, "P": 1, "domain": [[0, 1]], "theta": ["1"], "terms": ["a", "b"]});
        assert!(matches!(validate(&bad), Err(Error::Manifest { field, .. }) if field == "theta"));
        let bad = serde_json::json!({"Q": 1, "P": 1, "domain": [[1, 0]], "theta": ["1"], "terms": ["a"]});
        assert!(matches!(validate(&bad), Err(Error::Manifest { field, .. }) if field == "domain[0]"));
        let bad = serde_json::json!({"Q": 1, "P": 1, "domains": [], "theta": ["1"], "terms": ["a"]});
        assert!(matches!(validate(&bad), Err(Error::Manifest { field, .. }) if field == "domains"));
    }
}
