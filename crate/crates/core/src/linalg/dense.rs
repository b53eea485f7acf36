use nalgebra::{DMatrix, SymmetricEigen};

use super::{EigenPairs, Scalar};
use crate::error::{Error, Result};

/// Largest reduced problem `dense_smallest` accepts by default.
pub const DEFAULT_REDUCED_CAP: usize = 2000;

/// Full dense Hermitian eigendecomposition, eigenvalues ascending.
pub fn dense_eigh<T: Scalar>(h: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let cols: Vec<_> = order.iter().map(|&i| eig.eigenvectors.column(i).clone_owned()).collect();
    (values, DMatrix::from_columns(&cols))
}

/// Eigenvalues only, ascending.
pub fn dense_eigenvalues<T: Scalar>(h: &DMatrix<T>) -> Vec<f64> {
    if h.nrows() == 0 {
        return Vec::new();
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// The `r` smallest eigenpairs of a small dense Hermitian matrix.
pub fn dense_smallest<T: Scalar>(h: &DMatrix<T>, r: usize) -> Result<EigenPairs<T>> {
    dense_smallest_capped(h, r, DEFAULT_REDUCED_CAP)
}

pub fn dense_smallest_capped<T: Scalar>(h: &DMatrix<T>, r: usize, cap: usize) -> Result<EigenPairs<T>> {
    let m = h.nrows();
    if !h.is_square() {
        return Err(Error::Argument(format!("{}x{} matrix is not square", m, h.ncols())));
    }
    if m > cap {
        return Err(Error::Argument(format!("reduced problem of size {m} exceeds the cap of {cap}")));
    }
    if r > m {
        return Err(Error::Argument(format!("requested {r} eigenpairs of a {m}x{m} matrix")));
    }
    let (values, vectors) = dense_eigh(h);
    let norm_estimate = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let vectors = vectors.columns(0, r).clone_owned();
    let residuals = (0..r)
        .map(|j| {
            let v = vectors.column(j);
            (h * v - v.scale(values[j])).norm()
        })
        .collect();
    Ok(EigenPairs { values: values[..r].to_vec(), vectors, residuals, norm_estimate })
}
