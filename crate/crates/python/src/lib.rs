//! Python bindings: build or load a family, run either greedy method, and
//! query certified bounds at new parameter values.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nalgebra::DMatrix;
use subscm::greedy::{dense_oracle, GreedyOptions, GreedyRun, IterationRecord};
use subscm::linalg::{EigenOptions, HermitianOperator};
use subscm::problems::{self, parse_theta};
use subscm::scm::{self as scm_mod, AffineFamily, BoundingBox, ScmState, TrainingSet};
use subscm::subspace::{self as sub_mod, SelectionMode, SubspaceOptions, SubspacePool};
use subscm::Error;

fn to_py(e: Error) -> PyErr {
    let msg = format!("{} error: {e}", e.kind());
    match e {
        Error::Argument(_)
        | Error::DimensionMismatch(_)
        | Error::Parse { .. }
        | Error::Evaluation(_)
        | Error::MatrixMarket { .. }
        | Error::NotHermitian { .. }
        | Error::Manifest { .. }
        | Error::InField { .. } => PyValueError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// An affine family `A(μ) = Σ θ_q(μ) A_q` of real symmetric matrices.
#[pyclass(name = "Family", module = "subscm_py", frozen)]
struct PyFamily {
    inner: Arc<AffineFamily>,
}

#[pymethods]
impl PyFamily {
    /// Dense terms (lists of rows), coefficient expressions and a box domain.
    #[new]
    #[pyo3(signature = (terms, theta, domain, label=None))]
    fn new(
        terms: Vec<Vec<Vec<f64>>>,
        theta: Vec<String>,
        domain: Vec<(f64, f64)>,
        label: Option<String>,
    ) -> PyResult<Self> {
        let mut ops = Vec::with_capacity(terms.len());
        for rows in terms {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(PyValueError::new_err("every term must be a square list of rows"));
            }
            let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            ops.push(Arc::new(HermitianOperator::from_dense(m).map_err(to_py)?));
        }
        let theta = theta.iter().map(|s| parse_theta(s)).collect::<Result<Vec<_>, _>>().map_err(to_py)?;
        let mut family = AffineFamily::new(ops, theta, domain).map_err(to_py)?;
        if let Some(l) = label {
            family = family.with_label(l);
        }
        Ok(Self { inner: Arc::new(family) })
    }

    #[staticmethod]
    #[pyo3(signature = (q, n, delta=0.5, seed=0))]
    fn random(q: usize, n: usize, delta: f64, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(problems::make_random_family(q, n, delta, seed).map_err(to_py)?) })
    }

    /// The 2x2 rotation family `cos(μ) diag(1,-1) + sin(μ) [[0,-1],[-1,0]]`.
    #[staticmethod]
    fn circle() -> Self {
        Self { inner: Arc::new(problems::make_example_2_3()) }
    }

    #[staticmethod]
    #[pyo3(signature = (n, gap=1.0, seed=0))]
    fn analytic(n: usize, gap: f64, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(problems::make_1param_analytic(n, gap, seed).map_err(to_py)?) })
    }

    /// Loads a manifest (JSON plus Matrix Market terms).
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let loaded = problems::load_family(&path).map_err(to_py)?;
        Ok(Self { inner: Arc::new(loaded.family) })
    }

    /// Writes the family as a manifest directory; returns the manifest path.
    fn save(&self, dir: PathBuf) -> PyResult<PathBuf> {
        problems::write_manifest(&dir, &self.inner, None).map_err(to_py)
    }

    #[getter]
    fn q(&self) -> usize {
        self.inner.q()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn domain(&self) -> Vec<(f64, f64)> {
        self.inner.domain().to_vec()
    }

    fn theta(&self, mu: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.theta(&mu).map_err(to_py)
    }

    /// `A(μ)` as a list of rows.
    fn matrix(&self, mu: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let a = self.inner.assemble_dense(&mu).map_err(to_py)?;
        Ok((0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect())
    }

    /// Dense reference `λ_min(A(μ))` at each point.
    fn lambda_min(&self, py: Python<'_>, points: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let f = self.inner.clone();
        py.detach(move || dense_oracle(&f, &points)).map_err(to_py)
    }

    fn bounding_box(&self, py: Python<'_>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let f = self.inner.clone();
        let b = py.detach(move || scm_mod::compute_bounding_box(&f, &EigenOptions::default())).map_err(to_py)?;
        Ok((b.lower, b.upper))
    }

    fn __repr__(&self) -> String {
        format!("Family(label={:?}, Q={}, P={}, N={})", self.inner.label(), self.q(), self.p(), self.n())
    }
}

enum State {
    Scm(ScmState),
    Subspace(SubspacePool, Option<usize>),
}

/// The outcome of a greedy run. Keeps the samples so bounds can be
/// evaluated at points outside the training set.
#[pyclass(name = "GreedyResult", module = "subscm_py", frozen)]
struct PyGreedyResult {
    family: Arc<AffineFamily>,
    state: State,
    bbox: BoundingBox,
    history: Vec<IterationRecord>,
    reports: Vec<subscm::report::BoundReport>,
    termination: String,
    error: Option<String>,
}

impl PyGreedyResult {
    fn build<S>(family: Arc<AffineFamily>, run: GreedyRun<S>, state: State) -> Self {
        Self {
            family,
            state,
            bbox: run.bbox,
            history: run.history,
            reports: run.reports,
            termination: run.termination.as_str().to_string(),
            error: run.error.map(|e| e.to_string()),
        }
    }
}

#[pymethods]
impl PyGreedyResult {
    #[getter]
    fn termination(&self) -> &str {
        &self.termination
    }

    #[getter]
    fn converged(&self) -> bool {
        self.termination == "converged"
    }

    #[getter]
    fn error(&self) -> Option<String> {
        self.error.clone()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.history.len()
    }

    /// Largest selection ratio after each sweep.
    #[getter]
    fn max_ratios(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.max_ratio).collect()
    }

    #[getter]
    fn samples(&self) -> Vec<Vec<f64>> {
        let scm = match &self.state {
            State::Scm(s) => s,
            State::Subspace(p, _) => p.scm(),
        };
        scm.samples.iter().map(|s| s.mu.clone()).collect()
    }

    #[getter]
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        (self.bbox.lower.clone(), self.bbox.upper.clone())
    }

    /// Per-sweep records as dictionaries.
    fn history<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.history)
    }

    /// Bound reports of the final sweep, one per training point.
    fn reports<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.reports)
    }

    /// Certified bounds at `mu`: `lb`, `ub` and, for subspace runs, `slb`,
    /// `sub`, `heuristic` and `r`.
    fn bounds<'py>(&self, py: Python<'py>, mu: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let f = &self.family;
        let d = PyDict::new(py);
        let scm = match &self.state {
            State::Scm(s) => s,
            State::Subspace(p, _) => p.scm(),
        };
        let (lb, _) = scm_mod::lower_bound(scm, f, &self.bbox, &mu).map_err(to_py)?;
        d.set_item("lb", lb)?;
        d.set_item("ub", scm_mod::upper_bound(scm, f, &mu).map_err(to_py)?)?;
        if let State::Subspace(pool, r_max) = &self.state {
            let b = sub_mod::subspace_lower_bound(pool, f, &self.bbox, &mu, *r_max).map_err(to_py)?;
            d.set_item("slb", b.slb)?;
            d.set_item("sub", b.leading.lambda_sub())?;
            d.set_item("heuristic", b.leading.lambda_sub() - b.leading.rho)?;
            d.set_item("r", b.r)?;
        }
        Ok(d)
    }
}

fn greedy_options(
    eps: f64,
    j_max: usize,
    eig_tol: Option<f64>,
    warm_start: bool,
    oracle: Option<Vec<f64>>,
) -> GreedyOptions {
    let mut opts = GreedyOptions { eps, j_max, warm_start, oracle: oracle.map(Arc::new), ..Default::default() };
    if let Some(t) = eig_tol {
        opts.eig.tol = t;
    }
    opts
}

fn training_set(f: &AffineFamily, size: usize, seed: u64) -> PyResult<TrainingSet> {
    TrainingSet::random(f.domain(), size, seed).map_err(to_py)
}

/// Classical greedy on a random training set of `xi_size` points.
#[pyfunction]
#[pyo3(signature = (family, xi_size=1000, seed=1, eps=1e-4, j_max=200, eig_tol=None, warm_start=true, oracle=false))]
#[allow(clippy::too_many_arguments)]
fn scm_greedy(
    py: Python<'_>,
    family: &PyFamily,
    xi_size: usize,
    seed: u64,
    eps: f64,
    j_max: usize,
    eig_tol: Option<f64>,
    warm_start: bool,
    oracle: bool,
) -> PyResult<PyGreedyResult> {
    let f = family.inner.clone();
    let xi = training_set(&f, xi_size, seed)?;
    let run = py
        .detach(|| {
            let reference = if oracle { Some(dense_oracle(&f, xi.points())?) } else { None };
            scm_mod::scm_greedy(&f, &xi, &greedy_options(eps, j_max, eig_tol, warm_start, reference))
        })
        .map_err(to_py)?;
    let state = State::Scm(run.state.clone());
    Ok(PyGreedyResult::build(f, run, state))
}

/// Subspace-accelerated greedy. `heuristic=True` selects by the residual
/// ratio instead of the certified gap.
#[pyfunction]
#[pyo3(signature = (family, xi_size=1000, seed=1, eps=1e-4, j_max=200, ell=1, r_max=None, eig_tol=None, warm_start=true, heuristic=false, oracle=false))]
#[allow(clippy::too_many_arguments)]
fn subspace_greedy(
    py: Python<'_>,
    family: &PyFamily,
    xi_size: usize,
    seed: u64,
    eps: f64,
    j_max: usize,
    ell: usize,
    r_max: Option<usize>,
    eig_tol: Option<f64>,
    warm_start: bool,
    heuristic: bool,
    oracle: bool,
) -> PyResult<PyGreedyResult> {
    let f = family.inner.clone();
    let xi = training_set(&f, xi_size, seed)?;
    let run = py
        .detach(|| {
            let reference = if oracle { Some(dense_oracle(&f, xi.points())?) } else { None };
            let opts = SubspaceOptions {
                greedy: greedy_options(eps, j_max, eig_tol, warm_start, reference),
                ell,
                r_max,
                mode: if heuristic { SelectionMode::Heuristic } else { SelectionMode::Certified },
                lazy: false,
            };
            sub_mod::subspace_greedy(&f, &xi, &opts)
        })
        .map_err(to_py)?;
    let state = State::Subspace(run.state.clone(), r_max);
    Ok(PyGreedyResult::build(f, run, state))
}

/// `f(λ, η, ρ) = min(λ, η) − 2ρ²/(|λ − η| + sqrt((λ − η)² + 4ρ²))`.
#[pyfunction]
fn f_bound(lam: f64, eta: f64, rho: f64) -> f64 {
    sub_mod::f_bound(lam, eta, rho)
}

/// Runs the command-line tool in-process; returns its exit status.
#[pyfunction]
fn cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("subscm".to_string()).chain(args).collect();
    py.detach(move || subscm::cli::main_with_args(argv))
}

#[pymodule]
fn subscm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_class::<PyGreedyResult>()?;
    m.add_function(wrap_pyfunction!(scm_greedy, m)?)?;
    m.add_function(wrap_pyfunction!(subspace_greedy, m)?)?;
    m.add_function(wrap_pyfunction!(f_bound, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
