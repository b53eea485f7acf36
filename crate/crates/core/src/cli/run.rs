use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, RunPipeline, ORACLE_CAP};
use crate::error::{Error, Result};
use crate::greedy::{dense_oracle, heuristic_reliable_from, GreedyOptions, GreedyRun, IterationRecord};
use crate::linalg::EigenOptions;
use crate::lp::LpOptions;
use crate::problems::{load_family, GeneratorSpec};
use crate::report::BoundReport;
use crate::scm::{scm_greedy, AffineFamily, BoundingBox, TrainingSet};
use crate::subspace::{subspace_greedy, SelectionMode, SubspaceOptions};

/// Version of the column layout of `convergence.csv` and `bounds.csv`.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const BOUNDS_FILE: &str = "bounds.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ERROR_FILE: &str = "error.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInfo {
    pub label: String,
    pub source: String,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub domain: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub training_set: u64,
    pub eigensolver: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleInfo {
    pub requested: bool,
    pub computed: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    pub field: Option<String>,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        Self { kind: e.kind().into(), message: e.to_string(), field: e.field().map(str::to_string) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub csv_schema_version: u32,
    pub tool_version: String,
    pub config: RunConfig,
    pub problem: ProblemInfo,
    pub seeds: Seeds,
    pub training_set_size: usize,
    pub termination: String,
    pub converged: bool,
    /// Sweeps over the training set.
    pub iterations: usize,
    /// Samples in place at the end.
    pub samples: usize,
    /// `null` when infinite (no sample was ever added).
    pub final_max_ratio: Option<f64>,
    /// First `J` from which the heuristic value stayed below the reference everywhere.
    pub heuristic_reliable_from: Option<usize>,
    pub oracle: OracleInfo,
    pub bounding_box: BoxInfo,
    pub sample_points: Vec<Vec<f64>>,
    pub subspace_dimension: Option<usize>,
    pub threads: usize,
    pub wall_seconds: f64,
    pub error: Option<ErrorInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxInfo {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// A run that got as far as the greedy loop. `error` is set when the loop
/// aborted; the artifacts describe the partial run.
#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub summary: Summary,
    pub error: Option<Error>,
}

/// Failure before any artifact was written.
#[derive(Debug)]
pub enum RunError {
    /// Invalid configuration or problem input.
    Setup(Error),
    Compute(Error),
}

impl RunError {
    pub fn error(&self) -> &Error {
        match self {
            RunError::Setup(e) | RunError::Compute(e) => e,
        }
    }
}

pub(crate) fn load_problem(cfg: &RunConfig) -> Result<(AffineFamily, String)> {
    match (&cfg.manifest, &cfg.generator) {
        (Some(path), None) => Ok((load_family(path)?.family, path.display().to_string())),
        (None, Some(spec)) => {
            let spec = GeneratorSpec::parse(spec)
                .map_err(|e| Error::InField { field: "generator".into(), source: Box::new(e) })?;
            Ok((spec.build()?, format!("generator {spec}")))
        }
        _ => Err(Error::Manifest { field: "manifest".into(), message: "give a manifest or a generator spec".into() }),
    }
}

struct Finished {
    history: Vec<IterationRecord>,
    reports: Vec<BoundReport>,
    bbox: BoundingBox,
    termination: String,
    converged: bool,
    samples: Vec<Vec<f64>>,
    subspace_dimension: Option<usize>,
    error: Option<Error>,
}

fn finish<S>(run: GreedyRun<S>, samples: Vec<Vec<f64>>, subspace_dimension: Option<usize>) -> Finished {
    Finished {
        termination: run.termination.as_str().to_string(),
        converged: run.converged(),
        history: run.history,
        reports: run.reports,
        bbox: run.bbox,
        samples,
        subspace_dimension,
        error: run.error,
    }
}

/// Runs the configured pipeline and writes `convergence.csv`, `bounds.csv`
/// and `summary.json` into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> std::result::Result<RunOutcome, RunError> {
    cfg.validate().map_err(RunError::Setup)?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Setup(Error::Internal(format!("thread pool: {e}"))))?
            .install(|| run_inner(cfg, out_dir)),
        None => run_inner(cfg, out_dir),
    }
}

fn run_inner(cfg: &RunConfig, out_dir: &Path) -> std::result::Result<RunOutcome, RunError> {
    let start = Instant::now();
    let (family, source) = load_problem(cfg).map_err(RunError::Setup)?;
    let xi = TrainingSet::random(family.domain(), cfg.xi_size, cfg.xi_seed).map_err(RunError::Setup)?;
    std::fs::create_dir_all(out_dir).map_err(|e| RunError::Setup(Error::io(out_dir, e)))?;

    let mut oracle_info = OracleInfo { requested: cfg.oracle, computed: false, note: None };
    let oracle = if !cfg.oracle {
        None
    } else if family.dim() > ORACLE_CAP {
        oracle_info.note = Some(format!("skipped: N = {} exceeds the cap of {ORACLE_CAP}", family.dim()));
        None
    } else {
        oracle_info.computed = true;
        Some(Arc::new(dense_oracle(&family, xi.points()).map_err(RunError::Compute)?))
    };

    let greedy = GreedyOptions {
        eps: cfg.eps,
        j_max: cfg.j_max,
        eig: EigenOptions { tol: cfg.eig_tol, seed: cfg.eig_seed, ..Default::default() },
        lp: LpOptions { tol: cfg.lp_tol, ..Default::default() },
        warm_start: cfg.warm_start,
        keep_reports: false,
        oracle,
    };
    let finished = match cfg.pipeline {
        RunPipeline::Scm => {
            let run = scm_greedy(&family, &xi, &greedy).map_err(RunError::Compute)?;
            let samples = run.state.samples.iter().map(|s| s.mu.clone()).collect();
            finish(run, samples, None)
        }
        RunPipeline::Subspace | RunPipeline::SubspaceHeuristic => {
            let opts = SubspaceOptions {
                greedy,
                ell: cfg.ell,
                r_max: cfg.r_max,
                mode: if cfg.pipeline == RunPipeline::Subspace {
                    SelectionMode::Certified
                } else {
                    SelectionMode::Heuristic
                },
                lazy: cfg.lazy,
            };
            let run = subspace_greedy(&family, &xi, &opts).map_err(RunError::Compute)?;
            let samples = run.state.scm().samples.iter().map(|s| s.mu.clone()).collect();
            let dim = run.state.dim();
            finish(run, samples, Some(dim))
        }
    };

    let p = family.p();
    let write = |name: &str, f: &dyn Fn(&Path) -> Result<()>| f(&out_dir.join(name));
    write(CONVERGENCE_FILE, &|path| write_convergence(path, p, &finished.history)).map_err(RunError::Compute)?;
    write(BOUNDS_FILE, &|path| write_bounds(path, p, &finished.reports)).map_err(RunError::Compute)?;

    let summary = Summary {
        csv_schema_version: CSV_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        problem: ProblemInfo {
            label: family.label().to_string(),
            source,
            q: family.q(),
            p,
            n: family.dim(),
            domain: family.domain().iter().map(|&(a, b)| [a, b]).collect(),
        },
        seeds: Seeds { training_set: cfg.xi_seed, eigensolver: cfg.eig_seed },
        training_set_size: xi.len(),
        termination: finished.termination.clone(),
        converged: finished.converged,
        iterations: finished.history.len(),
        samples: finished.samples.len(),
        final_max_ratio: finished.history.last().map(|r| r.max_ratio).filter(|v| v.is_finite()),
        heuristic_reliable_from: heuristic_reliable_from(&finished.history),
        oracle: oracle_info,
        bounding_box: BoxInfo { lower: finished.bbox.lower.clone(), upper: finished.bbox.upper.clone() },
        sample_points: finished.samples.clone(),
        subspace_dimension: finished.subspace_dimension,
        threads: rayon::current_num_threads(),
        wall_seconds: start.elapsed().as_secs_f64(),
        error: finished.error.as_ref().map(ErrorInfo::from),
    };
    write_json(&out_dir.join(SUMMARY_FILE), &summary).map_err(RunError::Compute)?;
    Ok(RunOutcome { out_dir: out_dir.to_path_buf(), summary, error: finished.error })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::io(path, e))
}

pub fn convergence_header(p: usize) -> Vec<String> {
    let mut h = vec!["iter".to_string()];
    h.extend((1..=p).map(|k| format!("selected_mu_{k}")));
    h.extend(
        [
            "max_error_ratio",
            "max_abs_ub_error",
            "max_abs_lb_error",
            "max_abs_heuristic_error",
            "heuristic_is_lower",
            "wall_seconds_cumulative",
            "eig_seconds",
            "lp_seconds",
            "reduced_seconds",
            "lp_count",
            "eig_count",
        ]
        .map(String::from),
    );
    h
}

fn write_convergence(path: &Path, p: usize, history: &[IterationRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| Error::io(path, e);
    w.write_record(convergence_header(p)).map_err(io)?;
    for r in history {
        let mut row = vec![r.samples.to_string()];
        match &r.selected {
            Some(mu) => row.extend(mu.iter().map(|&v| num(v))),
            None => row.extend(std::iter::repeat_n(String::new(), p)),
        }
        row.extend([
            num(r.max_ratio),
            opt_num(r.max_abs_upper_error),
            opt_num(r.max_abs_lower_error),
            opt_num(r.max_abs_heuristic_error),
            opt(r.heuristic_is_lower),
            num(r.wall_seconds),
            num(r.times.eig),
            num(r.times.lp),
            num(r.times.reduced),
            r.lp_count.to_string(),
            r.eig_count.to_string(),
        ]);
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn bounds_header(p: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=p).map(|k| format!("mu_{k}")).collect();
    h.extend(
        [
            "lb",
            "slb",
            "sub",
            "ub",
            "heuristic",
            "residual",
            "r",
            "eta",
            "error_ratio",
            "heuristic_ratio",
            "oracle",
            "ub_near_zero",
            "lp_degenerate",
            "lp_cache_hit",
            "eta_fallback",
            "subspace_reused",
        ]
        .map(String::from),
    );
    h
}

fn write_bounds(path: &Path, p: usize, reports: &[BoundReport]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| Error::io(path, e);
    w.write_record(bounds_header(p)).map_err(io)?;
    for r in reports {
        let mut row: Vec<String> = r.mu.iter().map(|&v| num(v)).collect();
        let fl = &r.flags;
        row.extend([
            num(r.lb),
            opt_num(r.slb),
            opt_num(r.sub),
            num(r.ub),
            opt_num(r.heuristic),
            opt_num(r.residual),
            opt(r.r),
            opt_num(r.eta),
            num(r.error_ratio),
            opt_num(r.heuristic_ratio),
            opt_num(r.oracle),
            fl.ub_near_zero.to_string(),
            fl.lp_degenerate.to_string(),
            fl.lp_cache_hit.to_string(),
            fl.eta_fallback.to_string(),
            fl.subspace_reused.to_string(),
        ]);
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
