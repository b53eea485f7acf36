use serde::{Deserialize, Serialize};

/// Below this magnitude of the upper bound the error ratio switches to the
/// absolute gap.
pub const UB_ZERO_THRESHOLD: f64 = 1e-14;

/// `(ub − lb)/|ub|`, or `ub − lb` when `|ub| < 1e-14`. The flag reports the
/// absolute fallback. An infinite upper bound (no samples yet) gives `∞`.
pub fn error_ratio_flagged(lb: f64, ub: f64) -> (f64, bool) {
    if ub.is_infinite() {
        return (f64::INFINITY, false);
    }
    let gap = ub - lb;
    if ub.abs() < UB_ZERO_THRESHOLD {
        (gap, true)
    } else {
        (gap / ub.abs(), false)
    }
}

pub fn error_ratio(lb: f64, ub: f64) -> f64 {
    error_ratio_flagged(lb, ub).0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportFlags {
    /// The ratio used the absolute gap because the upper bound is near zero.
    pub ub_near_zero: bool,
    pub lp_degenerate: bool,
    pub lp_cache_hit: bool,
    /// `η` fell back to the LP value (all-box or ill-conditioned active set).
    pub eta_fallback: bool,
    /// Subspace values were carried over from the previous sweep.
    pub subspace_reused: bool,
}

/// Bounds at one parameter value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mu: Vec<f64>,
    /// LP lower bound over the box and sample constraints.
    pub lb: f64,
    /// Subspace lower bound (subspace pipelines only).
    pub slb: Option<f64>,
    /// Smallest Ritz value of the projected matrix.
    pub sub: Option<f64>,
    /// Minimum of the objective over the sampled Rayleigh vectors.
    pub ub: f64,
    /// `λ_SUB − ρ₁`: a lower bound for some eigenvalue, not certified for the smallest.
    pub heuristic: Option<f64>,
    /// Residual norm `ρ₁` of the leading Ritz vector.
    pub residual: Option<f64>,
    /// Ritz dimension that produced `slb`; `0` means the LP value.
    pub r: Option<usize>,
    pub eta: Option<f64>,
    /// Certified relative gap: `(ub − lb)/|ub|` for the classical method,
    /// `(sub − slb)/|sub|` for the subspace method.
    pub error_ratio: f64,
    /// `ρ₁/|λ_SUB|`.
    pub heuristic_ratio: Option<f64>,
    /// Dense reference `λ_min(A(μ))`, when computed.
    pub oracle: Option<f64>,
    pub flags: ReportFlags,
}

impl BoundReport {
    /// Best certified upper bound.
    pub fn upper(&self) -> f64 {
        self.sub.map_or(self.ub, |s| s.min(self.ub))
    }

    /// Best certified lower bound.
    pub fn lower(&self) -> f64 {
        self.slb.map_or(self.lb, |s| s.max(self.lb))
    }

    /// Checks `lb ≤ slb ≤ oracle ≤ sub ≤ ub` with slack `tol·(1+|oracle|)`.
    /// Returns the first violated link, if any.
    pub fn cascade_violation(&self, tol: f64) -> Option<String> {
        let oracle = self.oracle?;
        let slack = tol * (1.0 + oracle.abs());
        let mut chain: Vec<(&str, f64)> = vec![("lb", self.lb)];
        if let Some(v) = self.slb {
            chain.push(("slb", v));
        }
        chain.push(("oracle", oracle));
        if let Some(v) = self.sub {
            chain.push(("sub", v));
        }
        chain.push(("ub", self.ub));
        chain.windows(2).find_map(|w| {
            (w[0].1 > w[1].1 + slack)
                .then(|| format!("{} = {} > {} = {} at mu = {:?}", w[0].0, w[0].1, w[1].0, w[1].1, self.mu))
        })
    }
}
