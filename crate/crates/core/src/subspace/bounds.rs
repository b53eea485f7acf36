use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::SubspacePool;
use crate::error::{Error, Result};
use crate::linalg::{dense_eigenvalues, dense_eigh, Scalar, DEFAULT_REDUCED_CAP};
use crate::lp::{tighten_and_resolve, LpSolution, RowTag, TightenStatus, Tightened};
use crate::scm::{lower_bound_at, AffineFamily, BoundingBox};

/// `ρ²` values in `[-RHO_CLAMP·s, 0)` are rounding and clamp to zero, where
/// `s` is the largest diagonal entry of `UᴴA(μ)²U` (at least 1). Anything
/// more negative is reported as an internal error.
pub const RHO_CLAMP: f64 = 1e-10;

/// Below `RHO_REFINE·s` the reduced `ρ²` has lost most of its digits to
/// cancellation and `ρ` is recomputed from the stored images instead.
pub const RHO_REFINE: f64 = 1e-8;

/// Ritz data of the projected problem at one parameter.
#[derive(Clone, Debug)]
pub struct RitzData<T: Scalar = f64> {
    pub mu: Vec<f64>,
    pub r: usize,
    /// `λ_V^(1) ≤ … ≤ λ_V^(r)`.
    pub values: Vec<f64>,
    /// Ritz vectors in basis coordinates (`m × r`); `U = VW`.
    pub w: DMatrix<T>,
    /// `‖A(μ)U − UΛ‖₂`, filled in by [`residual_norm`].
    pub rho: f64,
    pub eta: Option<f64>,
    /// The requested `r` exceeded the basis dimension and was reduced.
    pub clamped: bool,
}

impl<T: Scalar> RitzData<T> {
    /// `λ_SUB`.
    pub fn lambda_sub(&self) -> f64 {
        self.values[0]
    }
}

/// Decomposition of `VᴴA(μ)V` shared by every `r`.
pub(crate) struct Projected<'a, T: Scalar> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
    pub cross: DMatrix<T>,
    pool: &'a SubspacePool<T>,
    theta: Vec<f64>,
}

pub(crate) fn project<'a, T: Scalar>(pool: &'a SubspacePool<T>, theta: &[f64]) -> Result<Projected<'a, T>> {
    let m = pool.dim();
    if m > DEFAULT_REDUCED_CAP {
        return Err(Error::Argument(format!("reduced problem of size {m} exceeds the cap of {DEFAULT_REDUCED_CAP}")));
    }
    let (values, vectors) = dense_eigh(&pool.reduced_matrix(theta));
    Ok(Projected { values, vectors, cross: pool.cross_matrix(theta), pool, theta: theta.to_vec() })
}

impl<T: Scalar> Projected<'_, T> {
    fn ritz(&self, mu: &[f64], r: usize) -> RitzData<T> {
        let m = self.values.len();
        let rr = r.min(m);
        RitzData {
            mu: mu.to_vec(),
            r: rr,
            values: self.values[..rr].to_vec(),
            w: self.vectors.columns(0, rr).clone_owned(),
            rho: 0.0,
            eta: None,
            clamped: rr < r,
        }
    }

    fn rho(&self, w: &DMatrix<T>, values: &[f64]) -> Result<f64> {
        rho_refined(self.pool, &self.theta, &self.cross, w, values)
    }
}

/// `(ρ², s)` from the reduced cross matrix.
fn rho2_reduced<T: Scalar>(cross: &DMatrix<T>, w: &DMatrix<T>, values: &[f64]) -> (f64, f64) {
    let mut x = w.adjoint() * cross * w;
    let scale = (0..x.nrows()).fold(1.0f64, |s, j| s.max(x[(j, j)].real().abs()));
    for (j, v) in values.iter().enumerate() {
        x[(j, j)] -= T::from_real(v * v);
    }
    (*dense_eigenvalues(&x).last().unwrap_or(&0.0), scale)
}

fn rho_refined<T: Scalar>(
    pool: &SubspacePool<T>,
    theta: &[f64],
    cross: &DMatrix<T>,
    w: &DMatrix<T>,
    values: &[f64],
) -> Result<f64> {
    let (rho2, scale) = rho2_reduced(cross, w, values);
    if rho2 < -RHO_CLAMP * scale {
        return Err(Error::Internal(format!("squared residual norm {rho2:.3e} is negative beyond rounding")));
    }
    if rho2 < RHO_REFINE * scale {
        return Ok(pool.explicit_residual(theta, w, values));
    }
    Ok(rho2.sqrt())
}

/// `λ_SUB(μ) = λ_min(VᴴA(μ)V)` with the `r` leading Ritz pairs.
pub fn ritz_upper_bound<T: Scalar>(
    pool: &SubspacePool<T>,
    family: &AffineFamily<T>,
    mu: &[f64],
    r: usize,
) -> Result<RitzData<T>> {
    if pool.dim() == 0 {
        return Err(Error::Argument("the subspace is empty".into()));
    }
    let p = project(pool, &family.theta(mu)?)?;
    let mut ritz = p.ritz(mu, r.max(1));
    ritz.rho = p.rho(&ritz.w, &ritz.values)?;
    Ok(ritz)
}

/// `ρ = ‖A(μ)U − UΛ‖₂` from the reduced matrices:
/// `ρ² = λ_max(WᴴΣθθ'G W − Λ²)`, or from the stored images when that
/// difference is within rounding of zero.
pub fn residual_norm<T: Scalar>(
    pool: &SubspacePool<T>,
    family: &AffineFamily<T>,
    mu: &[f64],
    ritz: &RitzData<T>,
) -> Result<f64> {
    let theta = family.theta(mu)?;
    rho_refined(pool, &theta, &pool.cross_matrix(&theta), &ritz.w, &ritz.values)
}

/// `β_i`: the smallest eigenvalue of
/// `(Λ_i − λ_i I) − V_iᴴUUᴴV_i (Λ_i − λ_i^(ℓ+1) I)`, so that
/// `u*A(μ_i)u ≥ λ_i + β_i` for unit `u ⊥ U`.
///
/// With `D = λ^(ℓ+1)I − Λ_i ≥ 0` and `P = V_iᴴUUᴴV_i` the matrix is
/// `(λ^(ℓ+1) − λ_i)I − (I − P)D`, whose spectrum is that of the Hermitian
/// `D^{1/2}(I − P)D^{1/2}`.
pub fn beta_gap<T: Scalar>(pool: &SubspacePool<T>, i: usize, w: &DMatrix<T>) -> Result<f64> {
    if i >= pool.len() {
        return Err(Error::Argument(format!("sample {i} of {}", pool.len())));
    }
    if w.nrows() != pool.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Ritz block has {} rows, basis has {} columns",
            w.nrows(),
            pool.dim()
        )));
    }
    let s = pool.sample(i);
    Ok(beta_from(&s.values, &s.coeffs, w))
}

fn beta_from<T: Scalar>(values: &[f64], coeffs: &DMatrix<T>, w: &DMatrix<T>) -> f64 {
    let ell = coeffs.ncols();
    let top = values[values.len() - 1];
    let lam = values[0];
    let e = coeffs.adjoint() * w;
    let p = &e * e.adjoint();
    let d: Vec<f64> = (0..ell).map(|j| (top - values[j]).max(0.0).sqrt()).collect();
    let k = DMatrix::from_fn(ell, ell, |a, b| {
        let id = if a == b { T::one() } else { T::zero() };
        (id - p[(a, b)]).scale(d[a] * d[b])
    });
    let kmax = *dense_eigenvalues(&k).last().unwrap_or(&0.0);
    (top - lam) - kmax
}

/// `η = θ(μ)ᵀΘ⁻¹ψ̃` with the sample rows of the active system raised by `β_i`.
pub fn eta_estimate(lp: &LpSolution, betas: &BTreeMap<usize, f64>, theta: &[f64]) -> Result<Tightened> {
    tighten_and_resolve(lp, betas, theta)
}

/// `f(η) = min(λ, η) − 2ρ²/(|λ−η| + √(|λ−η|² + 4ρ²))`, which is continuous
/// and increasing in `η`, with `λ = λ_V^(1)`. Written as
/// `min(λ, η) − 2ρ·ρ/(δ + hypot(δ, 2ρ))` so that `ρ = δ = 0` gives the
/// limit `min(λ, η)` and tiny `ρ` does not underflow.
pub fn f_bound(lambda_v1: f64, eta: f64, rho: f64) -> f64 {
    let m = lambda_v1.min(eta);
    if rho == 0.0 {
        return m;
    }
    let delta = (lambda_v1 - eta).abs();
    m - 2.0 * rho * (rho / (delta + delta.hypot(2.0 * rho)))
}

/// Outcome of the `r` sweep at one parameter.
#[derive(Clone, Debug)]
pub struct SubspaceBound<T: Scalar = f64> {
    pub slb: f64,
    /// The `r` attaining `slb`; `0` means the LP value.
    pub r: usize,
    pub eta: Option<f64>,
    pub eta_fallback: bool,
    /// Ritz data at `r = 1`, which carries `λ_SUB` and the heuristic residual.
    pub leading: RitzData<T>,
    /// Ritz data at the chosen `r` (equal to `leading` when `r ≤ 1`).
    pub chosen: RitzData<T>,
}

/// Sweeps `r = 0..=min(r_max, m)` with `2r ≤ N` and keeps the largest bound
/// (smallest `r` on ties). `r = 0` is the LP value.
pub(crate) fn sweep_r<T: Scalar>(
    pool: &SubspacePool<T>,
    proj: &Projected<T>,
    lp: &LpSolution,
    mu: &[f64],
    theta: &[f64],
    r_max: usize,
    n: usize,
) -> Result<SubspaceBound<T>> {
    let m = pool.dim();
    let mut leading = proj.ritz(mu, 1);
    leading.rho = proj.rho(&leading.w, &leading.values)?;
    let mut best = SubspaceBound {
        slb: lp.value,
        r: 0,
        eta: None,
        eta_fallback: false,
        leading: leading.clone(),
        chosen: leading.clone(),
    };
    let top = r_max.min(m).min(n / 2);
    for r in 1..=top {
        let mut ritz = if r == 1 { leading.clone() } else { proj.ritz(mu, r) };
        if r > 1 {
            ritz.rho = proj.rho(&ritz.w, &ritz.values)?;
        }
        let mut betas = BTreeMap::new();
        for tag in &lp.active {
            if let RowTag::Sample(i) = tag {
                let s = pool.sample(*i);
                betas.insert(*i, beta_from(&s.values, &s.coeffs, &ritz.w));
            }
        }
        let t = tighten_and_resolve(lp, &betas, theta)?;
        ritz.eta = Some(t.eta);
        let value = f_bound(ritz.values[0], t.eta, ritz.rho);
        if value > best.slb {
            best.slb = value;
            best.r = r;
            best.eta = Some(t.eta);
            best.eta_fallback = t.status != TightenStatus::Applied;
            best.chosen = ritz;
        }
    }
    Ok(best)
}

/// `λ_SLB(μ)`: the best `f` bound over the `r` sweep, never below `λ_LB`.
pub fn subspace_lower_bound<T: Scalar>(
    pool: &SubspacePool<T>,
    family: &AffineFamily<T>,
    bbox: &BoundingBox,
    mu: &[f64],
    r_max: Option<usize>,
) -> Result<SubspaceBound<T>> {
    if pool.is_empty() {
        return Err(Error::Argument("the subspace is empty".into()));
    }
    let theta = family.theta(mu)?;
    let lp = lower_bound_at(pool.scm(), bbox, &theta, None, &Default::default())?;
    let proj = project(pool, &theta)?;
    let r_max = r_max.unwrap_or(family.q().min(pool.dim()));
    sweep_r(pool, &proj, &lp, mu, &theta, r_max, family.dim())
}

/// `(λ_SUB − ρ₁, ρ₁)` for the leading Ritz vector. The value bounds some
/// eigenvalue of `A(μ)` from below, not necessarily the smallest.
pub fn residual_heuristic_bound<T: Scalar>(
    pool: &SubspacePool<T>,
    family: &AffineFamily<T>,
    mu: &[f64],
) -> Result<(f64, f64)> {
    let ritz = ritz_upper_bound(pool, family, mu, 1)?;
    Ok((ritz.lambda_sub() - ritz.rho, ritz.rho))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_examples() {
        assert_eq!(f_bound(1.0, 3.0, 0.0), 1.0);
        assert_eq!(f_bound(4.0, -2.0, 0.0), -2.0);
        assert!((f_bound(2.0, 2.0, 0.3) - 1.7).abs() < 1e-15);
        assert!((f_bound(0.0, 3.0, 2.0) + 1.0).abs() < 1e-15);
        assert!(f_bound(1.0, 1.0, 1e-200).is_finite());
    }

    #[test]
    fn beta_trivial_cases() {
        // l = 1, values (λ1, λ2) = (1, 4).
        let c = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let inside = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let outside = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!((beta_from(&[1.0, 4.0], &c, &inside) - 3.0).abs() < 1e-15);
        assert!(beta_from(&[1.0, 4.0], &c, &outside).abs() < 1e-15);
    }
}
