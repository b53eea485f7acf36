use std::time::Instant;

use super::state::{lower_bound_at, upper_bound_at};
use super::{AffineFamily, ScmState, TrainingSet};
use crate::error::Result;
use crate::greedy::{run_greedy, GreedyOptions, GreedyRun, PointEval, Sampler, SweepContext};
use crate::linalg::{EigenOptions, Scalar};
use crate::lp::LpSolution;
use crate::report::{error_ratio_flagged, BoundReport, ReportFlags};

impl<T: Scalar> Sampler<T> for ScmState<T> {
    fn sample_count(&self) -> usize {
        self.len()
    }

    fn contains(&self, mu: &[f64]) -> bool {
        ScmState::contains(self, mu)
    }

    fn evaluate(
        &self,
        ctx: &SweepContext<'_, T>,
        mu: &[f64],
        theta: &[f64],
        previous_lp: Option<&LpSolution>,
        _previous_report: Option<&BoundReport>,
    ) -> Result<PointEval> {
        let t = Instant::now();
        let lp = lower_bound_at(self, ctx.bbox, theta, previous_lp, ctx.lp)?;
        let lp_time = t.elapsed();
        let ub = upper_bound_at(self, theta);
        let (ratio, near_zero) = error_ratio_flagged(lp.value, ub);
        let report = BoundReport {
            mu: mu.to_vec(),
            lb: lp.value,
            slb: None,
            sub: None,
            ub,
            heuristic: None,
            residual: None,
            r: None,
            eta: None,
            error_ratio: ratio,
            heuristic_ratio: None,
            oracle: None,
            flags: ReportFlags {
                ub_near_zero: near_zero,
                lp_degenerate: lp.degenerate,
                lp_cache_hit: lp.cache_hit,
                ..Default::default()
            },
        };
        Ok(PointEval { report, lp, lp_time, reduced_time: Default::default() })
    }

    fn append(&mut self, family: &AffineFamily<T>, mu: &[f64], opts: &EigenOptions) -> Result<()> {
        self.add_sample(family, mu, opts).map(|_| ())
    }

    fn selection_ratio(&self, report: &BoundReport) -> f64 {
        report.error_ratio
    }
}

/// Classical greedy: pick the training point with the largest relative gap
/// `(ub − lb)/|ub|`, add its eigenpair as a constraint, repeat until the gap
/// is below `eps` everywhere or `j_max` samples are used.
pub fn scm_greedy<T: Scalar>(
    family: &AffineFamily<T>,
    xi: &TrainingSet,
    opts: &GreedyOptions,
) -> Result<GreedyRun<ScmState<T>>> {
    run_greedy(family, xi, opts, ScmState::new())
}
