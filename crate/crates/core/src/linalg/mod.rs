//! Hermitian operators, eigensolvers and Cholesky factorization.

mod cholesky;
pub mod dense;
mod eigen;
mod lanczos;
pub mod mtx;
mod operator;
mod ortho;
mod scalar;
mod sparse;

pub use cholesky::{cholesky, cholesky_dense, cholesky_sparse, reverse_cuthill_mckee, CholeskyFactor};
pub use dense::{dense_eigenvalues, dense_eigh, dense_smallest, dense_smallest_capped, DEFAULT_REDUCED_CAP};
pub use eigen::{EigenError, EigenOptions, EigenPairs, DEFAULT_EIG_TOL};
pub use lanczos::{extreme_eigs, lowest_eigpairs, smallest_eigpairs, smallest_eigpairs_with, DENSE_SWITCH};
pub use mtx::{read_matrix_market, write_matrix_market, MtxFile, MtxSymmetry};
pub use operator::{GeneralMatrix, HermitianOperator, Storage};
pub(crate) use ortho::hcat;
pub use ortho::{orthonormality_defect, orthonormalize_against};
pub use scalar::Scalar;
pub use sparse::CsrMatrix;
