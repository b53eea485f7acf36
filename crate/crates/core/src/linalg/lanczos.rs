//! Thick-restart block Krylov solver for the few smallest eigenpairs of a
//! Hermitian operator.
//!
//! The basis is grown a block at a time from the residuals of the current
//! Ritz pairs, which spans the same space as block Lanczos. Every new block is
//! fully reorthogonalized against the basis and the projected matrix is
//! formed explicitly, so Ritz values never drift from the true Rayleigh
//! quotients. When the basis is full it is compressed to the leading Ritz
//! vectors.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dense::{dense_eigh, dense_smallest_capped};
use super::ortho::{hcat, orthonormalize_against};
use super::{EigenError, EigenOptions, EigenPairs, HermitianOperator, Scalar};
use crate::error::Result;

/// Below this dimension `lowest_eigpairs` and `extreme_eigs` use the dense solver.
pub const DENSE_SWITCH: usize = 48;

const DROP_TOL: f64 = 1e-10;

/// The `k` smallest eigenpairs of `a`. Requires `1 ≤ k < N`.
pub fn smallest_eigpairs<T: Scalar>(
    a: &HermitianOperator<T>,
    k: usize,
    opts: &EigenOptions,
) -> std::result::Result<EigenPairs<T>, EigenError<T>> {
    smallest_eigpairs_with(a.dim(), k, |x| a.apply_block(x), opts)
}

/// Matrix-free variant: `apply` maps an `N × b` block to `A` times it.
pub fn smallest_eigpairs_with<T, F>(
    n: usize,
    k: usize,
    apply: F,
    opts: &EigenOptions,
) -> std::result::Result<EigenPairs<T>, EigenError<T>>
where
    T: Scalar,
    F: Fn(&DMatrix<T>) -> DMatrix<T>,
{
    if k == 0 {
        return Err(EigenError::Argument("requested zero eigenpairs".into()));
    }
    if k >= n {
        return Err(EigenError::Argument(format!(
            "requested {k} eigenpairs of an operator of dimension {n}; need k < N"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(EigenError::Argument(format!("tolerance must be positive, got {}", opts.tol)));
    }

    let b = opts.block_size.unwrap_or(k + 2).clamp(1, n);
    let m = opts.max_basis.unwrap_or_else(|| (6 * b).max(48)).max(k + 2 * b).min(n);
    let keep = (k + b).min(m.saturating_sub(b)).max(k);
    let max_restarts = opts.max_restarts.unwrap_or(50 * k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut q: DMatrix<T> = DMatrix::zeros(n, 0);
    let mut aq: DMatrix<T> = DMatrix::zeros(n, 0);
    let mut block = random_block(n, b, &mut rng);
    let mut norm_estimate = 0.0f64;
    let mut restarts = 0usize;
    let mut refreshed = false;

    loop {
        let (w, _) = orthonormalize_against(&q, &block, DROP_TOL);
        let w = top_up(&q, w, b.min(n - q.ncols()), &mut rng);
        if w.ncols() > 0 {
            let aw = apply(&w);
            q = hcat(&q, &w);
            aq = hcat(&aq, &aw);
        }

        let h = q.ad_mul(&aq);
        let (theta, s) = dense_eigh(&h);
        norm_estimate = theta.iter().fold(norm_estimate, |acc, t| acc.max(t.abs()));
        let nritz = b.max(k).min(theta.len());
        let s_lead = s.columns(0, nritz).clone_owned();
        let x = &q * &s_lead;
        let ax = &aq * &s_lead;
        let resid = residual_block(&x, &ax, &theta[..nritz]);
        let norms: Vec<f64> = resid.column_iter().map(|c| c.norm()).collect();
        let threshold = opts.tol * norm_estimate.max(f64::MIN_POSITIVE);
        let full_space = q.ncols() >= n;

        if norms[..k].iter().all(|r| *r <= threshold) || full_space {
            // Recheck against fresh products; the cached ones carry rounding
            // from every compression.
            let xk = x.columns(0, k).clone_owned();
            let axk = apply(&xk);
            let rk = residual_block(&xk, &axk, &theta[..k]);
            let residuals: Vec<f64> = rk.column_iter().map(|c| c.norm()).collect();
            let pairs = EigenPairs { values: theta[..k].to_vec(), vectors: xk, residuals, norm_estimate };
            // A full basis is exact up to rounding; nothing is left to add.
            if full_space || pairs.residuals.iter().all(|r| *r <= threshold) {
                return Ok(pairs);
            }
            if !refreshed {
                aq = apply(&q);
                refreshed = true;
                block = resid;
                continue;
            }
        }

        if restarts >= max_restarts {
            let xk = x.columns(0, k).clone_owned();
            return Err(EigenError::NotConverged {
                best: EigenPairs {
                    values: theta[..k].to_vec(),
                    vectors: xk,
                    residuals: norms[..k].to_vec(),
                    norm_estimate,
                },
                restarts,
            });
        }

        if q.ncols() + b > m {
            let p = keep.min(theta.len());
            let sp = s.columns(0, p).clone_owned();
            q = &q * &sp;
            aq = &aq * &sp;
            restarts += 1;
            refreshed = false;
        }

        // Expand with the residuals of the unconverged leading pairs.
        let cols: Vec<_> =
            (0..nritz).filter(|&j| norms[j] > threshold).map(|j| resid.column(j).clone_owned()).collect();
        block = if cols.is_empty() { random_block(n, b, &mut rng) } else { DMatrix::from_columns(&cols) };
    }
}

/// `k` smallest eigenpairs, switching to the dense solver for small or
/// exhausted problems (`N ≤ DENSE_SWITCH` or `k ≥ N`).
pub fn lowest_eigpairs<T: Scalar>(a: &HermitianOperator<T>, k: usize, opts: &EigenOptions) -> Result<EigenPairs<T>> {
    let n = a.dim();
    if n <= DENSE_SWITCH || k >= n {
        return dense_smallest_capped(&a.to_dense(), k.min(n), usize::MAX);
    }
    Ok(smallest_eigpairs(a, k, opts)?)
}

/// `(λ_min, λ_max)`; the maximum is the negated minimum of `-A`.
pub fn extreme_eigs<T: Scalar>(a: &Arc<HermitianOperator<T>>, opts: &EigenOptions) -> Result<(f64, f64)> {
    let lo = lowest_eigpairs(a.as_ref(), 1, opts)?.values[0];
    let neg = a.negated();
    let hi = -lowest_eigpairs(&neg, 1, opts)?.values[0];
    Ok((lo, hi))
}

fn residual_block<T: Scalar>(x: &DMatrix<T>, ax: &DMatrix<T>, theta: &[f64]) -> DMatrix<T> {
    let mut r = ax.clone();
    for (j, t) in theta.iter().enumerate() {
        let mut col = r.column_mut(j);
        col.axpy(T::from_real(-*t), &x.column(j), T::one());
    }
    r
}

fn random_block<T: Scalar>(n: usize, b: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    DMatrix::from_fn(n, b, |_, _| T::sample_normal(rng))
}

/// Fills a deflated block back to `want` columns with random directions.
fn top_up<T: Scalar>(q: &DMatrix<T>, w: DMatrix<T>, want: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    let n = q.nrows();
    let mut w = w;
    let mut attempts = 0;
    while w.ncols() < want && attempts < 8 {
        let basis = hcat(q, &w);
        let (extra, _) = orthonormalize_against(&basis, &random_block(n, want - w.ncols(), rng), DROP_TOL);
        w = hcat(&w, &extra);
        attempts += 1;
    }
    w
}

#[cfg(test)]
mod tests {
    #![allow(clippy::needless_range_loop)]

    use super::*;
    use crate::linalg::dense::dense_eigenvalues;
    use crate::linalg::{orthonormality_defect, CsrMatrix};
    use rand::Rng;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| f64::sample_normal(&mut rng));
        (&a + a.transpose()).scale(0.5)
    }

    #[test]
    fn diagonal_two_smallest() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let a = HermitianOperator::<f64>::diagonal(&d);
        let p = smallest_eigpairs(&a, 2, &EigenOptions::default()).unwrap();
        assert!((p.values[0] - 1.0).abs() < 1e-10);
        assert!((p.values[1] - 2.0).abs() < 1e-10);
        assert!((p.vectors[(0, 0)].abs() - 1.0).abs() < 1e-6);
        assert!((p.vectors[(1, 1)].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tridiagonal_laplacian() {
        let n = 50;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.0));
            if i + 1 < n {
                trip.push((i, i + 1, -1.0));
                trip.push((i + 1, i, -1.0));
            }
        }
        let a = HermitianOperator::from_sparse(CsrMatrix::from_triplets(n, n, trip).unwrap()).unwrap();
        let p = smallest_eigpairs(&a, 1, &EigenOptions::default()).unwrap();
        let oracle = dense_eigenvalues(&a.to_dense())[0];
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / 51.0).cos();
        assert!((oracle - exact).abs() < 1e-12);
        assert!((p.values[0] - exact).abs() < 1e-9, "{} vs {}", p.values[0], exact);
    }

    #[test]
    fn random_dense_matches_oracle() {
        let m = random_symmetric(200, 7);
        let oracle = dense_eigenvalues(&m);
        let a = HermitianOperator::from_dense(m).unwrap();
        let p = smallest_eigpairs(&a, 3, &EigenOptions::default()).unwrap();
        for j in 0..3 {
            assert!((p.values[j] - oracle[j]).abs() < 1e-8, "{j}: {} vs {}", p.values[j], oracle[j]);
        }
        assert!(orthonormality_defect(&p.vectors) < 1e-10);
        assert!(p.residuals.iter().all(|r| *r <= 1e-6 * p.norm_estimate));
    }

    #[test]
    fn monotone_in_k() {
        let a = HermitianOperator::from_dense(random_symmetric(120, 3)).unwrap();
        let opts = EigenOptions::default();
        let p2 = smallest_eigpairs(&a, 2, &opts).unwrap();
        let p4 = smallest_eigpairs(&a, 4, &opts).unwrap();
        for j in 0..2 {
            assert!((p2.values[j] - p4.values[j]).abs() <= 10.0 * opts.tol);
        }
    }

    #[test]
    fn complex_hermitian() {
        use num_complex::Complex64;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 80;
        let b = DMatrix::from_fn(n, n, |_, _| Complex64::sample_normal(&mut rng));
        let h = (&b + b.adjoint()).scale(0.5);
        let oracle = dense_eigenvalues(&h);
        let a = HermitianOperator::from_dense(h).unwrap();
        let p = smallest_eigpairs(&a, 2, &EigenOptions::default()).unwrap();
        assert!((p.values[0] - oracle[0]).abs() < 1e-8);
        assert!((p.values[1] - oracle[1]).abs() < 1e-8);
    }

    #[test]
    fn argument_errors() {
        let a = HermitianOperator::<f64>::identity(3);
        assert!(matches!(smallest_eigpairs(&a, 3, &EigenOptions::default()), Err(EigenError::Argument(_))));
        assert!(matches!(smallest_eigpairs(&a, 0, &EigenOptions::default()), Err(EigenError::Argument(_))));
    }

    #[test]
    fn cap_reports_best_iterate() {
        let a = HermitianOperator::from_dense(random_symmetric(300, 5)).unwrap();
        let opts = EigenOptions { tol: 1e-14, max_restarts: Some(0), max_basis: Some(12), ..Default::default() };
        match smallest_eigpairs(&a, 1, &opts) {
            Err(EigenError::NotConverged { best, restarts }) => {
                assert_eq!(restarts, 0);
                assert_eq!(best.values.len(), 1);
                assert!(best.residuals[0] > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn extreme_small_cases() {
        let a = Arc::new(HermitianOperator::<f64>::diagonal(&[1.0, -1.0]));
        assert_eq!(extreme_eigs(&a, &EigenOptions::default()).unwrap(), (-1.0, 1.0));
        let b =
            Arc::new(HermitianOperator::from_dense(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0])).unwrap());
        let (lo, hi) = extreme_eigs(&b, &EigenOptions::default()).unwrap();
        assert!((lo + 1.0).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn extreme_random_sparse() {
        let n = 500;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, f64::sample_normal(&mut rng)));
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                let v = f64::sample_normal(&mut rng);
                trip.push((i, j, v));
                trip.push((j, i, v));
            }
        }
        let a = Arc::new(HermitianOperator::from_sparse(CsrMatrix::from_triplets(n, n, trip).unwrap()).unwrap());
        let oracle = dense_eigenvalues(&a.to_dense());
        let (lo, hi) = extreme_eigs(&a, &EigenOptions::default()).unwrap();
        assert!((lo - oracle[0]).abs() < 1e-8, "{lo} vs {}", oracle[0]);
        assert!((hi - oracle[n - 1]).abs() < 1e-8, "{hi} vs {}", oracle[n - 1]);
    }

    #[test]
    fn negation_symmetry_is_exact() {
        let a = Arc::new(HermitianOperator::from_dense(random_symmetric(90, 21)).unwrap());
        let neg = Arc::new(a.negated());
        let opts = EigenOptions::default();
        let (lo, hi) = extreme_eigs(&a, &opts).unwrap();
        let (nlo, nhi) = extreme_eigs(&neg, &opts).unwrap();
        assert_eq!((nlo, nhi), (-hi, -lo));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = HermitianOperator::from_dense(random_symmetric(100, 2)).unwrap();
        let opts = EigenOptions::default().with_seed(42);
        let p = smallest_eigpairs(&a, 2, &opts).unwrap();
        let q = smallest_eigpairs(&a, 2, &opts).unwrap();
        assert_eq!(p.values, q.values);
    }
}
