//! Small dense linear programs `min cᵀy` over a box intersected with
//! half-spaces `a_iᵀy ≥ b_i`.
//!
//! The solver is a dual simplex over active sets of `Q` constraints. It
//! starts from the box vertex that minimizes `cᵀy` over the box alone, which
//! is dual feasible, and repeatedly swaps in the first violated constraint.
//! Both choices use Bland's rule, so the iteration cannot cycle.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default optimality tolerance, matching the LP tolerance used for the
/// reference experiments.
pub const DEFAULT_LP_TOL: f64 = 1e-8;

/// Condition number above which an active system is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Which constraint an active row comes from. The derived order is the
/// tie-breaking order: sample rows by index, then lower box faces, then upper.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RowTag {
    Sample(usize),
    BoxLower(usize),
    BoxUpper(usize),
}

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `(a_i, b_i)` meaning `a_iᵀy ≥ b_i`.
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { objective, lower, upper, rows: Vec::new() }
    }

    pub fn with_row(mut self, a: Vec<f64>, b: f64) -> Self {
        self.rows.push((a, b));
        self
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        let q = self.dim();
        if q == 0 {
            return Err(Error::Argument("LP needs at least one variable".into()));
        }
        if self.lower.len() != q || self.upper.len() != q {
            return Err(Error::DimensionMismatch(format!(
                "objective has {q} entries but the box has {} lower and {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for k in 0..q {
            if !(self.lower[k].is_finite() && self.upper[k].is_finite() && self.objective[k].is_finite()) {
                return Err(Error::Argument(format!("non-finite LP data in coordinate {k}")));
            }
            if self.lower[k] > self.upper[k] {
                return Err(Error::Argument(format!(
                    "box coordinate {k} has lower {} > upper {}",
                    self.lower[k], self.upper[k]
                )));
            }
        }
        for (i, (a, b)) in self.rows.iter().enumerate() {
            if a.len() != q {
                return Err(Error::DimensionMismatch(format!("row {i} has {} entries, expected {q}", a.len())));
            }
            if !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument(format!("non-finite entry in row {i}")));
            }
        }
        Ok(())
    }

    /// Number of constraints counting both box faces per coordinate.
    fn constraint_count(&self) -> usize {
        self.rows.len() + 2 * self.dim()
    }

    /// Constraint `index` in tag order, as `(tag, g, h)` with `gᵀy ≥ h`.
    fn constraint(&self, index: usize) -> (RowTag, DVector<f64>, f64) {
        let q = self.dim();
        let j = self.rows.len();
        if index < j {
            let (a, b) = &self.rows[index];
            (RowTag::Sample(index), DVector::from_column_slice(a), *b)
        } else if index < j + q {
            let k = index - j;
            (RowTag::BoxLower(k), unit(q, k, 1.0), self.lower[k])
        } else {
            let k = index - j - q;
            (RowTag::BoxUpper(k), unit(q, k, -1.0), -self.upper[k])
        }
    }

    fn index_of(&self, tag: RowTag) -> usize {
        match tag {
            RowTag::Sample(i) => i,
            RowTag::BoxLower(k) => self.rows.len() + k,
            RowTag::BoxUpper(k) => self.rows.len() + self.dim() + k,
        }
    }
}

fn unit(q: usize, k: usize, s: f64) -> DVector<f64> {
    let mut v = DVector::zeros(q);
    v[k] = s;
    v
}

#[derive(Clone, Debug)]
pub struct LpOptions {
    /// Dual feasibility tolerance (relative to `‖c‖`) when choosing among
    /// equally optimal active sets.
    pub tol: f64,
    pub max_iterations: Option<usize>,
    /// Upper limit on active-set candidates examined at a degenerate vertex.
    pub max_degenerate_candidates: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_LP_TOL, max_iterations: None, max_degenerate_candidates: 20_000 }
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub y: DVector<f64>,
    pub value: f64,
    /// `Q` active constraints, ascending in tag order.
    pub active: Vec<RowTag>,
    /// Active rows: `θ(μ_i)ᵀ` for samples, `e_qᵀ` for box faces.
    pub theta: DMatrix<f64>,
    /// Right-hand sides: `λ_i` for samples, the bound value for box faces.
    pub psi: DVector<f64>,
    /// Dual multipliers of the active rows (all nonnegative at an optimum).
    pub multipliers: DVector<f64>,
    /// 2-norm condition number of `theta`.
    pub condition: f64,
    /// More than `Q` constraints were tight at the optimum.
    pub degenerate: bool,
    /// Returned unchanged from a previous solve.
    pub cache_hit: bool,
    pub iterations: usize,
    /// Objective and row count this solution was computed for.
    objective: Vec<f64>,
    row_count: usize,
}

impl LpSolution {
    pub fn has_sample_row(&self) -> bool {
        self.active.iter().any(|t| matches!(t, RowTag::Sample(_)))
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }
}

pub fn lp_minimize(p: &LpProblem, opts: &LpOptions) -> Result<LpSolution> {
    lp_minimize_warm(p, None, opts)
}

/// Like [`lp_minimize`], reusing `previous` when it was computed for the same
/// objective and its minimizer satisfies every row added since. A relaxation's
/// minimizer that is feasible for the tighter problem is still optimal.
pub fn lp_minimize_warm(p: &LpProblem, previous: Option<&LpSolution>, opts: &LpOptions) -> Result<LpSolution> {
    p.validate()?;
    if let Some(prev) = previous {
        let same_objective = prev.objective.len() == p.dim()
            && prev.objective.iter().zip(&p.objective).all(|(a, b)| a.to_bits() == b.to_bits());
        if same_objective && prev.row_count <= p.rows.len() {
            let still_feasible = p.rows[prev.row_count..].iter().all(|(a, b)| slack(a, *b, &prev.y) >= -feas_tol(*b));
            if still_feasible {
                let mut hit = prev.clone();
                hit.cache_hit = true;
                hit.row_count = p.rows.len();
                return Ok(hit);
            }
        }
    }
    solve(p, opts)
}

fn slack(a: &[f64], b: f64, y: &DVector<f64>) -> f64 {
    a.iter().zip(y.iter()).map(|(x, v)| x * v).sum::<f64>() - b
}

fn feas_tol(h: f64) -> f64 {
    1e-12 * (1.0 + h.abs())
}

fn tight_tol(h: f64) -> f64 {
    1e-10 * (1.0 + h.abs())
}

struct Basis {
    indices: Vec<usize>,
    g: DMatrix<f64>,
    h: DVector<f64>,
}

impl Basis {
    fn from_indices(p: &LpProblem, indices: Vec<usize>) -> Self {
        let q = p.dim();
        let mut g = DMatrix::zeros(q, q);
        let mut h = DVector::zeros(q);
        for (r, &idx) in indices.iter().enumerate() {
            let (_, gr, hr) = p.constraint(idx);
            g.set_row(r, &gr.transpose());
            h[r] = hr;
        }
        Self { indices, g, h }
    }
}

fn solve(p: &LpProblem, opts: &LpOptions) -> Result<LpSolution> {
    let q = p.dim();
    let c = DVector::from_column_slice(&p.objective);
    let ncons = p.constraint_count();
    let start: Vec<usize> = (0..q)
        .map(|k| if p.objective[k] >= 0.0 { p.index_of(RowTag::BoxLower(k)) } else { p.index_of(RowTag::BoxUpper(k)) })
        .collect();
    let mut basis = Basis::from_indices(p, start);
    let max_iter = opts.max_iterations.unwrap_or(100 * (ncons + q));
    let mut iterations = 0;

    let y = loop {
        let lu = basis.g.clone().lu();
        let y = lu.solve(&basis.h).ok_or_else(|| Error::LpInternal("active system became singular".into()))?;
        let entering = (0..ncons).find(|&idx| {
            if basis.indices.contains(&idx) {
                return false;
            }
            let (_, g, h) = p.constraint(idx);
            g.dot(&y) - h < -feas_tol(h)
        });
        let Some(j) = entering else { break y };
        if iterations >= max_iter {
            return Err(Error::LpInternal(format!("no optimum after {iterations} pivots")));
        }
        iterations += 1;

        let (_, gj, _) = p.constraint(j);
        let gt = basis.g.transpose().lu();
        let lambda = gt.solve(&c).ok_or_else(|| Error::LpInternal("singular dual system".into()))?;
        let alpha = gt.solve(&gj).ok_or_else(|| Error::LpInternal("singular dual system".into()))?;
        let pivot_tol = 1e-12 * alpha.amax().max(1.0);
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..q {
            if alpha[r] > pivot_tol {
                let ratio = lambda[r].max(0.0) / alpha[r];
                let better = match leave {
                    None => true,
                    Some((lr, best)) => ratio < best || (ratio == best && basis.indices[r] < basis.indices[lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            let (tag, _, _) = p.constraint(j);
            return Err(Error::LpInfeasible(format!("constraint {tag:?} cannot be satisfied")));
        };
        basis.indices[r] = j;
        basis = Basis::from_indices(p, basis.indices.clone());
    };

    // Resolve ties among equally optimal active sets.
    let tight: Vec<usize> = (0..ncons)
        .filter(|&idx| {
            let (_, g, h) = p.constraint(idx);
            (g.dot(&y) - h).abs() <= tight_tol(h)
        })
        .collect();
    let degenerate = tight.len() > q;
    let mut chosen = None;
    let mut sorted_basis = basis.indices.clone();
    sorted_basis.sort_unstable();
    if degenerate {
        let cnorm = c.norm().max(f64::MIN_POSITIVE);
        let mut examined = 0;
        for_each_combination(tight.len(), q, |combo| {
            examined += 1;
            if examined > opts.max_degenerate_candidates {
                return false;
            }
            let indices: Vec<usize> = combo.iter().map(|&k| tight[k]).collect();
            if indices == sorted_basis {
                chosen = Some(Basis::from_indices(p, indices));
                return false;
            }
            let cand = Basis::from_indices(p, indices);
            if condition_number(&cand.g) > SINGULAR_CONDITION {
                return true;
            }
            let Some(lambda) = cand.g.transpose().lu().solve(&c) else { return true };
            if lambda.iter().any(|l| *l < -opts.tol * cnorm) {
                return true;
            }
            let Some(ycand) = cand.g.clone().lu().solve(&cand.h) else { return true };
            let feasible = (0..ncons).all(|idx| {
                let (_, g, h) = p.constraint(idx);
                g.dot(&ycand) - h >= -1e-10 * (1.0 + h.abs())
            });
            if feasible {
                chosen = Some(cand);
                false
            } else {
                true
            }
        });
    }
    let basis = chosen.unwrap_or_else(|| Basis::from_indices(p, sorted_basis));
    finish(p, basis, degenerate, iterations)
}

fn finish(p: &LpProblem, basis: Basis, degenerate: bool, iterations: usize) -> Result<LpSolution> {
    let q = p.dim();
    let c = DVector::from_column_slice(&p.objective);
    let y = basis
        .g
        .clone()
        .lu()
        .solve(&basis.h)
        .ok_or_else(|| Error::LpInternal("final active system is singular".into()))?;
    let multipliers = basis.g.transpose().lu().solve(&c).unwrap_or_else(|| DVector::zeros(q));
    let mut theta = basis.g.clone();
    let mut psi = basis.h.clone();
    let mut active = Vec::with_capacity(q);
    for (r, &idx) in basis.indices.iter().enumerate() {
        let (tag, _, _) = p.constraint(idx);
        if let RowTag::BoxUpper(k) = tag {
            theta.set_row(r, &unit(q, k, 1.0).transpose());
            psi[r] = p.upper[k];
        }
        active.push(tag);
    }
    let condition = condition_number(&theta);
    let value = c.dot(&y);
    Ok(LpSolution {
        y,
        value,
        active,
        theta,
        psi,
        multipliers,
        condition,
        degenerate,
        cache_hit: false,
        iterations,
        objective: p.objective.clone(),
        row_count: p.rows.len(),
    })
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Visits `k`-subsets of `0..n` in lexicographic order until `visit` returns false.
fn for_each_combination(n: usize, k: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !visit(&idx) {
            return;
        }
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TightenStatus {
    Applied,
    /// No sample row is active; `η` is the LP value.
    AllBox,
    /// The active system is numerically singular; `η` is the LP value.
    IllConditioned,
}

#[derive(Clone, Debug)]
pub struct Tightened {
    pub y: DVector<f64>,
    pub eta: f64,
    pub status: TightenStatus,
}

/// Adds `bumps[i]` to the right-hand side of every active sample row `i`,
/// then solves the square system: `y̌ = Θ⁻¹ψ̃`, `η = cᵀy̌`.
pub fn tighten_and_resolve(s: &LpSolution, bumps: &BTreeMap<usize, f64>, c: &[f64]) -> Result<Tightened> {
    let q = s.theta.nrows();
    if c.len() != q {
        return Err(Error::DimensionMismatch(format!("objective has {} entries, expected {q}", c.len())));
    }
    let fallback = |status| Tightened { y: s.y.clone(), eta: s.value, status };
    if !s.has_sample_row() {
        return Ok(fallback(TightenStatus::AllBox));
    }
    if !(s.condition <= SINGULAR_CONDITION) {
        return Ok(fallback(TightenStatus::IllConditioned));
    }
    let mut psi = s.psi.clone();
    for (r, tag) in s.active.iter().enumerate() {
        if let RowTag::Sample(i) = tag {
            let beta =
                bumps.get(i).ok_or_else(|| Error::Argument(format!("no gap value supplied for active sample {i}")))?;
            psi[r] += beta;
        }
    }
    let Some(y) = s.theta.clone().lu().solve(&psi) else {
        return Ok(fallback(TightenStatus::IllConditioned));
    };
    let eta = c.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
    Ok(Tightened { y, eta, status: TightenStatus::Applied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn example() -> LpProblem {
        LpProblem::new(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2], vec![-1.0, -1.0], vec![1.0, 1.0])
            .with_row(vec![1.0, 0.0], -1.0)
            .with_row(vec![0.0, 1.0], -1.0)
            .with_row(vec![-1.0, 0.0], -1.0)
    }

    #[test]
    fn circle_vertex() {
        let s = lp_minimize(&example(), &LpOptions::default()).unwrap();
        assert!((s.y[0] + 1.0).abs() < 1e-15 && (s.y[1] + 1.0).abs() < 1e-15);
        assert!((s.value + std::f64::consts::SQRT_2).abs() < 1e-14);
        assert_eq!(s.active, vec![RowTag::Sample(0), RowTag::Sample(1)]);
        assert!(s.degenerate);
    }

    #[test]
    fn box_only() {
        let p = LpProblem::new(vec![1.0, 0.0], vec![0.0, 0.0], vec![1.0, 1.0]);
        let s = lp_minimize(&p, &LpOptions::default()).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.y[0], 0.0);
        assert!(!s.has_sample_row());
    }

    #[test]
    fn negative_objective_uses_upper_face() {
        let p = LpProblem::new(vec![-2.0, 1.0], vec![0.0, -3.0], vec![5.0, 4.0]);
        let s = lp_minimize(&p, &LpOptions::default()).unwrap();
        assert_eq!(s.value, -13.0);
        assert_eq!(s.active, vec![RowTag::BoxLower(1), RowTag::BoxUpper(0)]);
        // Upper faces are reported as e_q y = u_q.
        let r = s.active.iter().position(|t| *t == RowTag::BoxUpper(0)).unwrap();
        assert_eq!(s.theta[(r, 0)], 1.0);
        assert_eq!(s.psi[r], 5.0);
    }

    #[test]
    fn infeasible_is_reported() {
        let p = LpProblem::new(vec![1.0], vec![0.0], vec![1.0]).with_row(vec![1.0], 2.0);
        assert!(matches!(lp_minimize(&p, &LpOptions::default()), Err(Error::LpInfeasible(_))));
    }

    #[test]
    fn tighten_diagonal() {
        let p = LpProblem::new(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2], vec![-1.0, -1.0], vec![1.0, 1.0])
            .with_row(vec![1.0, 0.0], -1.0)
            .with_row(vec![0.0, 1.0], -1.0);
        let s = lp_minimize(&p, &LpOptions::default()).unwrap();
        assert_eq!(s.theta, DMatrix::identity(2, 2));
        let bumps = BTreeMap::from([(0, 0.5), (1, 0.5)]);
        let t = tighten_and_resolve(&s, &bumps, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert_eq!(t.status, TightenStatus::Applied);
        assert!((t.y[0] + 0.5).abs() < 1e-15 && (t.y[1] + 0.5).abs() < 1e-15);
        assert!((t.eta + FRAC_1_SQRT_2).abs() < 1e-15);

        let zero = BTreeMap::from([(0, 0.0), (1, 0.0)]);
        let t0 = tighten_and_resolve(&s, &zero, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert_eq!(t0.y, s.y);
        assert_eq!(t0.eta, s.value);
    }

    #[test]
    fn tighten_all_box_falls_back() {
        let p = LpProblem::new(vec![1.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]);
        let s = lp_minimize(&p, &LpOptions::default()).unwrap();
        let t = tighten_and_resolve(&s, &BTreeMap::new(), &[1.0, 1.0]).unwrap();
        assert_eq!(t.status, TightenStatus::AllBox);
        assert_eq!(t.eta, s.value);
    }

    #[test]
    fn warm_start_reuses_when_new_row_is_slack() {
        let opts = LpOptions::default();
        let p = example();
        let s = lp_minimize(&p, &opts).unwrap();
        let p2 = p.clone().with_row(vec![1.0, 1.0], -3.0);
        let w = lp_minimize_warm(&p2, Some(&s), &opts).unwrap();
        assert!(w.cache_hit);
        assert_eq!(w.value, s.value);
        let p3 = p.with_row(vec![1.0, 1.0], -1.0);
        let w3 = lp_minimize_warm(&p3, Some(&s), &opts).unwrap();
        assert!(!w3.cache_hit);
        assert!((w3.value + FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| {
            seen.push(c.to_vec());
            true
        });
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut count = 0;
        for_each_combination(3, 3, |_| {
            count += 1;
            true
        });
        assert_eq!(count, 1);
    }
}
