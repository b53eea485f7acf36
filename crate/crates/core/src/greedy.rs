//! The greedy sampling loop shared by the classical and subspace methods:
//! sweep the training set, stop or pick the worst parameter, add it as a
//! sample, repeat.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dense_eigenvalues, EigenOptions, Scalar};
use crate::lp::{LpOptions, LpSolution};
use crate::report::BoundReport;
use crate::scm::{compute_bounding_box, AffineFamily, BoundingBox, TrainingSet};

/// Default relative tolerance on the bound gap.
pub const DEFAULT_EPS: f64 = 1e-4;
/// Default sample budget.
pub const DEFAULT_J_MAX: usize = 200;

#[derive(Clone, Debug)]
pub struct GreedyOptions {
    pub eps: f64,
    pub j_max: usize,
    pub eig: EigenOptions,
    pub lp: LpOptions,
    /// Reuse a parameter's previous LP solution when it stays feasible.
    pub warm_start: bool,
    /// Keep every sweep's reports in the history, not just the last.
    pub keep_reports: bool,
    /// Dense `λ_min` at each training point, aligned with the training set.
    pub oracle: Option<Arc<Vec<f64>>>,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            j_max: DEFAULT_J_MAX,
            eig: EigenOptions::default(),
            lp: LpOptions::default(),
            warm_start: true,
            keep_reports: false,
            oracle: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// `J_max` samples were used without reaching the tolerance.
    MaxSamples,
    /// The worst parameter is already a sample; adding it again cannot help.
    Stagnated,
    Failed,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxSamples => "not_converged_max_samples",
            Termination::Stagnated => "not_converged_stagnated",
            Termination::Failed => "failed",
        }
    }
}

/// Wall-clock seconds by phase. Sweep phases sum the time spent in each
/// worker, so they can exceed the elapsed time in parallel runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub eig: f64,
    pub lp: f64,
    pub reduced: f64,
}

/// One sweep over the training set with `samples` samples in place.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub samples: usize,
    pub max_ratio: f64,
    pub argmax: usize,
    /// Added after this sweep; `None` when the loop stopped here.
    pub selected: Option<Vec<f64>>,
    pub max_abs_upper_error: Option<f64>,
    pub max_abs_lower_error: Option<f64>,
    pub max_abs_heuristic_error: Option<f64>,
    /// The heuristic value is at most the reference `λ_min` at every point.
    pub heuristic_is_lower: Option<bool>,
    pub wall_seconds: f64,
    pub times: PhaseTimes,
    /// Cumulative counts.
    pub lp_count: usize,
    pub eig_count: usize,
    #[serde(skip)]
    pub reports: Vec<BoundReport>,
}

#[derive(Debug)]
pub struct GreedyRun<S> {
    pub state: S,
    pub bbox: BoundingBox,
    pub history: Vec<IterationRecord>,
    /// The reports of the last sweep.
    pub reports: Vec<BoundReport>,
    pub termination: Termination,
    /// Set when `termination` is `Failed`; the state holds the samples added before.
    pub error: Option<Error>,
}

impl<S> GreedyRun<S> {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn final_max_ratio(&self) -> f64 {
        self.history.last().map_or(f64::INFINITY, |r| r.max_ratio)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

pub(crate) struct SweepContext<'a, T: Scalar> {
    pub family: &'a AffineFamily<T>,
    pub bbox: &'a BoundingBox,
    pub lp: &'a LpOptions,
}

pub(crate) struct PointEval {
    pub report: BoundReport,
    pub lp: LpSolution,
    pub lp_time: Duration,
    pub reduced_time: Duration,
}

pub(crate) trait Sampler<T: Scalar>: Sync {
    fn sample_count(&self) -> usize;
    fn contains(&self, mu: &[f64]) -> bool;
    fn evaluate(
        &self,
        ctx: &SweepContext<'_, T>,
        mu: &[f64],
        theta: &[f64],
        previous_lp: Option<&LpSolution>,
        previous_report: Option<&BoundReport>,
    ) -> Result<PointEval>;
    fn append(&mut self, family: &AffineFamily<T>, mu: &[f64], opts: &EigenOptions) -> Result<()>;
    /// The quantity maximized over the training set.
    fn selection_ratio(&self, report: &BoundReport) -> f64;
}

pub(crate) fn run_greedy<T: Scalar, S: Sampler<T>>(
    family: &AffineFamily<T>,
    xi: &TrainingSet,
    opts: &GreedyOptions,
    mut sampler: S,
) -> Result<GreedyRun<S>> {
    if xi.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    if let Some(o) = &opts.oracle {
        if o.len() != xi.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} reference values for {} training points",
                o.len(),
                xi.len()
            )));
        }
    }
    let start = Instant::now();
    let mut times = PhaseTimes::default();
    let t0 = Instant::now();
    let bbox = compute_bounding_box(family, &opts.eig)?;
    times.eig += t0.elapsed().as_secs_f64();
    let mut eig_count = 2 * family.q();
    let mut lp_count = 0usize;

    let thetas: Vec<Vec<f64>> = xi.points().iter().map(|mu| family.theta(mu)).collect::<Result<_>>()?;
    let mut caches: Vec<Option<LpSolution>> = vec![None; xi.len()];
    let mut previous: Option<Vec<BoundReport>> = None;
    let mut history = Vec::new();
    let ctx = SweepContext { family, bbox: &bbox, lp: &opts.lp };

    loop {
        let evals: Vec<Result<PointEval>> = xi
            .points()
            .par_iter()
            .zip(thetas.par_iter())
            .zip(caches.par_iter())
            .enumerate()
            .map(|(k, ((mu, th), cache))| {
                let prev_report = previous.as_ref().map(|r| &r[k]);
                sampler.evaluate(&ctx, mu, th, cache.as_ref(), prev_report)
            })
            .collect();
        let mut reports = Vec::with_capacity(xi.len());
        for (k, e) in evals.into_iter().enumerate() {
            let mut e = e?;
            times.lp += e.lp_time.as_secs_f64();
            times.reduced += e.reduced_time.as_secs_f64();
            if !e.lp.cache_hit {
                lp_count += 1;
            }
            if let Some(o) = &opts.oracle {
                e.report.oracle = Some(o[k]);
            }
            reports.push(e.report);
            caches[k] = opts.warm_start.then_some(e.lp);
        }

        let (argmax, max_ratio) = reports.iter().map(|r| sampler.selection_ratio(r)).enumerate().fold(
            (0, f64::NEG_INFINITY),
            |(bi, bv), (i, v)| {
                let v = if v.is_nan() { f64::INFINITY } else { v };
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            },
        );
        let mut record = IterationRecord {
            samples: sampler.sample_count(),
            max_ratio,
            argmax,
            selected: None,
            max_abs_upper_error: None,
            max_abs_lower_error: None,
            max_abs_heuristic_error: None,
            heuristic_is_lower: None,
            wall_seconds: 0.0,
            times: times.clone(),
            lp_count,
            eig_count,
            reports: Vec::new(),
        };
        oracle_columns(&mut record, &reports);

        let mu = xi.points()[argmax].clone();
        let termination = if max_ratio <= opts.eps {
            Some(Termination::Converged)
        } else if sampler.sample_count() >= opts.j_max {
            Some(Termination::MaxSamples)
        } else if sampler.contains(&mu) {
            Some(Termination::Stagnated)
        } else {
            None
        };
        if let Some(termination) = termination {
            record.wall_seconds = start.elapsed().as_secs_f64();
            if opts.keep_reports {
                record.reports = reports.clone();
            }
            history.push(record);
            return Ok(GreedyRun { state: sampler, bbox, history, reports, termination, error: None });
        }

        let t = Instant::now();
        let appended = sampler.append(family, &mu, &opts.eig);
        times.eig += t.elapsed().as_secs_f64();
        eig_count += 1;
        record.selected = Some(mu);
        record.times = times.clone();
        record.eig_count = eig_count;
        record.wall_seconds = start.elapsed().as_secs_f64();
        if opts.keep_reports {
            record.reports = reports.clone();
        }
        history.push(record);
        if let Err(error) = appended {
            return Ok(GreedyRun {
                state: sampler,
                bbox,
                history,
                reports,
                termination: Termination::Failed,
                error: Some(error),
            });
        }
        previous = Some(reports);
    }
}

fn oracle_columns(record: &mut IterationRecord, reports: &[BoundReport]) {
    if reports.iter().any(|r| r.oracle.is_none()) {
        return;
    }
    let fold = |f: &dyn Fn(&BoundReport) -> Option<f64>| -> Option<f64> {
        reports.iter().map(f).try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
    };
    record.max_abs_upper_error = fold(&|r| Some((r.upper() - r.oracle?).abs()));
    record.max_abs_lower_error = fold(&|r| Some((r.oracle? - r.lower()).abs()));
    record.max_abs_heuristic_error = fold(&|r| Some((r.heuristic? - r.oracle?).abs()));
    if reports.iter().all(|r| r.heuristic.is_some()) {
        record.heuristic_is_lower = Some(reports.iter().all(|r| {
            let o = r.oracle.unwrap_or(f64::NAN);
            r.heuristic.unwrap_or(f64::NAN) <= o + 1e-12 * (1.0 + o.abs())
        }));
    }
}

/// Smallest `J` such that the heuristic value was below the reference at
/// every training point in every sweep from `J` on.
pub fn heuristic_reliable_from(history: &[IterationRecord]) -> Option<usize> {
    let mut first = None;
    for rec in history {
        match rec.heuristic_is_lower {
            Some(true) => {
                first.get_or_insert(rec.samples);
            }
            _ => first = None,
        }
    }
    first
}

/// Dense reference `λ_min(A(μ))` at every point, in parallel.
pub fn dense_oracle<T: Scalar>(family: &AffineFamily<T>, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points.par_iter().map(|mu| Ok(dense_eigenvalues(&family.assemble_dense(mu)?)[0])).collect()
}
