use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::bounds::{project, sweep_r};
use super::SubspacePool;
use crate::error::Result;
use crate::greedy::{run_greedy, GreedyOptions, GreedyRun, PointEval, Sampler, SweepContext};
use crate::linalg::{EigenOptions, Scalar};
use crate::lp::LpSolution;
use crate::report::{error_ratio_flagged, BoundReport, ReportFlags};
use crate::scm::{lower_bound_at, upper_bound_at, AffineFamily, TrainingSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Select by the certified gap `(λ_SUB − λ_SLB)/|λ_SUB|`.
    #[default]
    Certified,
    /// Select by the residual ratio `ρ₁/|λ_SUB|`.
    Heuristic,
}

#[derive(Clone, Debug)]
pub struct SubspaceOptions {
    pub greedy: GreedyOptions,
    /// Eigenvectors kept per sample.
    pub ell: usize,
    /// Largest Ritz dimension tried; defaults to `min(Q, m)`.
    pub r_max: Option<usize>,
    pub mode: SelectionMode,
    /// Recompute the subspace lower bound only where the LP was re-solved,
    /// carrying the previous value over at cache hits.
    pub lazy: bool,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        Self { greedy: GreedyOptions::default(), ell: 1, r_max: None, mode: SelectionMode::Certified, lazy: false }
    }
}

struct SubspaceSampler<T: Scalar> {
    pool: SubspacePool<T>,
    r_max: Option<usize>,
    mode: SelectionMode,
    lazy: bool,
}

impl<T: Scalar> Sampler<T> for SubspaceSampler<T> {
    fn sample_count(&self) -> usize {
        self.pool.len()
    }

    fn contains(&self, mu: &[f64]) -> bool {
        self.pool.contains(mu)
    }

    fn evaluate(
        &self,
        ctx: &SweepContext<'_, T>,
        mu: &[f64],
        theta: &[f64],
        previous_lp: Option<&LpSolution>,
        previous_report: Option<&BoundReport>,
    ) -> Result<PointEval> {
        let pool = &self.pool;
        let t = Instant::now();
        let lp = lower_bound_at(pool.scm(), ctx.bbox, theta, previous_lp, ctx.lp)?;
        let lp_time = t.elapsed();
        let ub = upper_bound_at(pool.scm(), theta);
        let mut flags = ReportFlags { lp_degenerate: lp.degenerate, lp_cache_hit: lp.cache_hit, ..Default::default() };
        if pool.dim() == 0 {
            let (ratio, near_zero) = error_ratio_flagged(lp.value, ub);
            flags.ub_near_zero = near_zero;
            let report = BoundReport {
                mu: mu.to_vec(),
                lb: lp.value,
                slb: Some(lp.value),
                sub: None,
                ub,
                heuristic: None,
                residual: None,
                r: Some(0),
                eta: None,
                error_ratio: ratio,
                heuristic_ratio: Some(f64::INFINITY),
                oracle: None,
                flags,
            };
            return Ok(PointEval { report, lp, lp_time, reduced_time: Default::default() });
        }

        let t = Instant::now();
        let proj = project(pool, theta)?;
        let r_max = self.r_max.unwrap_or(ctx.family.q()).min(pool.dim());
        let reuse = self.lazy && lp.cache_hit;
        let bound = sweep_r(pool, &proj, &lp, mu, theta, if reuse { 0 } else { r_max }, ctx.family.dim())?;
        let reduced_time = t.elapsed();

        let sub = bound.leading.values[0];
        let rho1 = bound.leading.rho;
        let (mut slb, mut r, mut eta) = (bound.slb, bound.r, bound.eta);
        flags.eta_fallback = bound.eta_fallback;
        if let (true, Some(prev)) = (reuse, previous_report) {
            if let Some(prev_slb) = prev.slb {
                if prev_slb > slb {
                    slb = prev_slb;
                    r = prev.r.unwrap_or(0);
                    eta = prev.eta;
                    flags.eta_fallback = prev.flags.eta_fallback;
                    flags.subspace_reused = true;
                }
            }
        }
        let (ratio, near_zero) = error_ratio_flagged(slb, sub);
        flags.ub_near_zero = near_zero;
        let heuristic_ratio = if sub.abs() < crate::report::UB_ZERO_THRESHOLD { rho1 } else { rho1 / sub.abs() };
        let report = BoundReport {
            mu: mu.to_vec(),
            lb: lp.value,
            slb: Some(slb),
            sub: Some(sub),
            ub,
            heuristic: Some(sub - rho1),
            residual: Some(rho1),
            r: Some(r),
            eta,
            error_ratio: ratio,
            heuristic_ratio: Some(heuristic_ratio),
            oracle: None,
            flags,
        };
        Ok(PointEval { report, lp, lp_time, reduced_time })
    }

    fn append(&mut self, family: &AffineFamily<T>, mu: &[f64], opts: &EigenOptions) -> Result<()> {
        self.pool.append_sample(family, mu, opts).map(|_| ())
    }

    fn selection_ratio(&self, report: &BoundReport) -> f64 {
        match self.mode {
            SelectionMode::Certified => report.error_ratio,
            SelectionMode::Heuristic => report.heuristic_ratio.unwrap_or(f64::INFINITY),
        }
    }
}

/// Subspace-accelerated greedy: like the classical loop, but each sample
/// also contributes its `ℓ` leading eigenvectors to a growing subspace that
/// sharpens both bounds.
pub fn subspace_greedy<T: Scalar>(
    family: &AffineFamily<T>,
    xi: &TrainingSet,
    opts: &SubspaceOptions,
) -> Result<GreedyRun<SubspacePool<T>>> {
    let sampler = SubspaceSampler {
        pool: SubspacePool::new(family, opts.ell)?,
        r_max: opts.r_max,
        mode: opts.mode,
        lazy: opts.lazy,
    };
    let run = run_greedy(family, xi, &opts.greedy, sampler)?;
    Ok(GreedyRun {
        state: run.state.pool,
        bbox: run.bbox,
        history: run.history,
        reports: run.reports,
        termination: run.termination,
        error: run.error,
    })
}
