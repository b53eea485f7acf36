use nalgebra::{DMatrix, DVector};

use super::Scalar;

/// Orthonormalizes the columns of `w` against the orthonormal columns of
/// `basis` and against each other, with two Gram–Schmidt passes per column.
/// Columns whose remaining norm falls below `drop_tol` times their original
/// norm are dropped. Returns the accepted columns and, per input column,
/// whether it was kept.
pub fn orthonormalize_against<T: Scalar>(basis: &DMatrix<T>, w: &DMatrix<T>, drop_tol: f64) -> (DMatrix<T>, Vec<bool>) {
    let n = w.nrows();
    let mut accepted: Vec<DVector<T>> = Vec::with_capacity(w.ncols());
    let mut kept = Vec::with_capacity(w.ncols());
    for col in w.column_iter() {
        let mut x = col.clone_owned();
        let norm0 = x.norm();
        if !(norm0 > 0.0) || !norm0.is_finite() {
            kept.push(false);
            continue;
        }
        for _ in 0..2 {
            if basis.ncols() > 0 {
                let coeff = basis.ad_mul(&x);
                x -= basis * coeff;
            }
            for a in &accepted {
                let c = a.dotc(&x);
                x.axpy(-c, a, T::one());
            }
        }
        let norm = x.norm();
        if norm <= drop_tol * norm0 {
            kept.push(false);
            continue;
        }
        x.unscale_mut(norm);
        accepted.push(x);
        kept.push(true);
    }
    let out = if accepted.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&accepted) };
    (out, kept)
}

/// Largest deviation of `QᴴQ` from the identity.
pub fn orthonormality_defect<T: Scalar>(q: &DMatrix<T>) -> f64 {
    let g = q.ad_mul(q);
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g[(i, j)] - target).modulus());
        }
    }
    worst
}

pub(crate) fn hcat<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}
