use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{CholeskyFactor, CsrMatrix, Scalar};
use crate::error::{Error, Result};

/// How a Hermitian operator is represented. Dense and sparse storage hold the
/// matrix entries; the remaining variants are applied operator-style and are
/// never formed unless `to_dense` is requested.
#[derive(Clone, Debug)]
pub enum Storage<T: Scalar> {
    Dense(DMatrix<T>),
    Sparse(CsrMatrix<T>),
    /// `Σ c_k B_k`.
    Sum(Vec<(f64, Arc<HermitianOperator<T>>)>),
    /// `L̃⁻¹ B L̃⁻ᴴ` for a Cholesky factor `X = L̃ L̃ᴴ`.
    Congruence {
        inner: Arc<HermitianOperator<T>>,
        factor: Arc<CholeskyFactor<T>>,
    },
    /// `C_iᴴ C_j + C_jᴴ C_i` (or `C_iᴴ C_i` when `left` is `right`), where
    /// `C_k = L̃⁻¹ A_k L̃⁻ᴴ` for a general square matrix `A_k`.
    NormalProduct {
        left: Arc<GeneralMatrix<T>>,
        right: Arc<GeneralMatrix<T>>,
        factor: Arc<CholeskyFactor<T>>,
        diagonal: bool,
    },
}

/// A Hermitian matrix `A = Aᴴ`. Dense and sparse inputs are symmetrized on
/// construction and the size of the removed anti-Hermitian part is recorded.
#[derive(Clone, Debug)]
pub struct HermitianOperator<T: Scalar = f64> {
    dim: usize,
    storage: Storage<T>,
    symmetry_defect: f64,
}

impl<T: Scalar> HermitianOperator<T> {
    /// Symmetrizes `(A + Aᴴ)/2`. The recorded defect is
    /// `max |a_ij - conj(a_ji)| / max |a_ij|`.
    pub fn from_dense(a: DMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Argument(format!("matrix is {}x{}, expected square", a.nrows(), a.ncols())));
        }
        if a.nrows() == 0 {
            return Err(Error::Argument("matrix dimension must be positive".into()));
        }
        let adj = a.adjoint();
        let defect = (&a - &adj).iter().fold(0.0f64, |m, v| m.max(v.modulus()));
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.modulus()));
        let sym = (a + adj).scale(0.5);
        Ok(Self { dim: sym.nrows(), storage: Storage::Dense(sym), symmetry_defect: relative(defect, scale) })
    }

    pub fn from_sparse(a: CsrMatrix<T>) -> Result<Self> {
        if a.nrows() == 0 {
            return Err(Error::Argument("matrix dimension must be positive".into()));
        }
        let scale = a.max_abs();
        let (sym, defect) = a.hermitian_part()?;
        Ok(Self { dim: sym.nrows(), storage: Storage::Sparse(sym), symmetry_defect: relative(defect, scale) })
    }

    pub fn identity(n: usize) -> Self {
        Self { dim: n, storage: Storage::Sparse(CsrMatrix::identity(n)), symmetry_defect: 0.0 }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let trip = d.iter().enumerate().map(|(i, &v)| (i, i, T::from_real(v)));
        Self {
            dim: d.len(),
            storage: Storage::Sparse(CsrMatrix::from_triplets(d.len(), d.len(), trip).expect("in range")),
            symmetry_defect: 0.0,
        }
    }

    /// `Σ c_k B_k` applied term by term.
    pub fn sum(terms: Vec<(f64, Arc<HermitianOperator<T>>)>) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::Argument("empty operator sum".into()));
        };
        let dim = first.dim;
        if terms.iter().any(|(_, t)| t.dim != dim) {
            return Err(Error::DimensionMismatch("operator sum terms differ in dimension".into()));
        }
        Ok(Self { dim, storage: Storage::Sum(terms), symmetry_defect: 0.0 })
    }

    /// `L̃⁻¹ B L̃⁻ᴴ`.
    pub fn congruence(inner: Arc<HermitianOperator<T>>, factor: Arc<CholeskyFactor<T>>) -> Result<Self> {
        if inner.dim != factor.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator of dimension {} and factor of dimension {}",
                inner.dim,
                factor.dim()
            )));
        }
        Ok(Self { dim: inner.dim, storage: Storage::Congruence { inner, factor }, symmetry_defect: 0.0 })
    }

    /// `C_leftᴴ C_right + C_rightᴴ C_left`, or `C_leftᴴ C_left` if `diagonal`.
    pub fn normal_product(
        left: Arc<GeneralMatrix<T>>,
        right: Arc<GeneralMatrix<T>>,
        factor: Arc<CholeskyFactor<T>>,
        diagonal: bool,
    ) -> Result<Self> {
        let n = factor.dim();
        for m in [&left, &right] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} term with an inner product of dimension {n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(Self { dim: n, storage: Storage::NormalProduct { left, right, factor, diagonal }, symmetry_defect: 0.0 })
    }

    pub(crate) fn dense_trusted(a: DMatrix<T>) -> Self {
        Self { dim: a.nrows(), storage: Storage::Dense(a), symmetry_defect: 0.0 }
    }

    pub(crate) fn sparse_trusted(a: CsrMatrix<T>) -> Self {
        Self { dim: a.nrows(), storage: Storage::Sparse(a), symmetry_defect: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn storage(&self) -> &Storage<T> {
        &self.storage
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.symmetry_defect
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// `-A`. Negation is exact in floating point, so applying the negated
    /// operator gives the bitwise negation of applying `A`.
    pub fn negated(self: &Arc<Self>) -> Self {
        Self {
            dim: self.dim,
            storage: Storage::Sum(vec![(-1.0, Arc::clone(self))]),
            symmetry_defect: self.symmetry_defect,
        }
    }

    pub fn apply(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.dim, "operator applied to a vector of the wrong length");
        match &self.storage {
            Storage::Dense(m) => m * x,
            Storage::Sparse(s) => s.mul_vec(x),
            Storage::Sum(terms) => {
                let mut out = DVector::zeros(self.dim);
                for (c, t) in terms {
                    out += t.apply(x).scale(*c);
                }
                out
            }
            Storage::Congruence { inner, factor } => factor.solve_lower(&inner.apply(&factor.solve_lower_adjoint(x))),
            Storage::NormalProduct { left, right, factor, diagonal } => {
                let z = factor.solve_lower_adjoint(x);
                let cr = factor.solve_lower(&right.mul_vec(&z));
                let lhs = factor.solve_lower(&left.adjoint_mul_vec(&factor.solve_lower_adjoint(&cr)));
                if *diagonal {
                    lhs
                } else {
                    let cl = factor.solve_lower(&left.mul_vec(&z));
                    let rhs = factor.solve_lower(&right.adjoint_mul_vec(&factor.solve_lower_adjoint(&cl)));
                    lhs + rhs
                }
            }
        }
    }

    pub fn apply_block(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.dim, "operator applied to a block of the wrong height");
        match &self.storage {
            Storage::Dense(m) => m * x,
            Storage::Sparse(s) => s.mul_block(x),
            Storage::Sum(terms) => {
                let mut out = DMatrix::zeros(self.dim, x.ncols());
                for (c, t) in terms {
                    out += t.apply_block(x).scale(*c);
                }
                out
            }
            Storage::Congruence { inner, factor } => {
                factor.solve_lower_block(&inner.apply_block(&factor.solve_lower_adjoint_block(x)))
            }
            Storage::NormalProduct { .. } => {
                let cols: Vec<DVector<T>> = x.column_iter().map(|c| self.apply(&c.clone_owned())).collect();
                DMatrix::from_columns(&cols)
            }
        }
    }

    /// Dense copy of the operator. Operator-form storage is materialized by
    /// applying it to the identity.
    pub fn to_dense(&self) -> DMatrix<T> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => s.to_dense(),
            _ => {
                let a = self.apply_block(&DMatrix::identity(self.dim, self.dim));
                (&a + a.adjoint()).scale(0.5)
            }
        }
    }

    /// `u*Au / u*u` split into real and imaginary parts. The imaginary part
    /// is zero up to rounding for a Hermitian operator.
    pub fn rayleigh_parts(&self, u: &DVector<T>) -> (f64, f64) {
        let au = self.apply(u);
        let num = u.dotc(&au);
        let den = u.norm_squared();
        (num.real() / den, num.imaginary() / den)
    }

    pub fn rayleigh(&self, u: &DVector<T>) -> f64 {
        self.rayleigh_parts(u).0
    }
}

fn relative(defect: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        defect / scale
    } else {
        0.0
    }
}

/// A general (possibly non-Hermitian) square matrix, used as an affine term
/// of the singular-value pipeline.
#[derive(Clone, Debug)]
pub enum GeneralMatrix<T: Scalar = f64> {
    Dense(DMatrix<T>),
    Sparse(CsrMatrix<T>),
}

impl<T: Scalar> GeneralMatrix<T> {
    pub fn nrows(&self) -> usize {
        match self {
            GeneralMatrix::Dense(m) => m.nrows(),
            GeneralMatrix::Sparse(s) => s.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            GeneralMatrix::Dense(m) => m.ncols(),
            GeneralMatrix::Sparse(s) => s.ncols(),
        }
    }

    pub fn mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        match self {
            GeneralMatrix::Dense(m) => m * x,
            GeneralMatrix::Sparse(s) => s.mul_vec(x),
        }
    }

    pub fn adjoint_mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        match self {
            GeneralMatrix::Dense(m) => m.ad_mul(x),
            GeneralMatrix::Sparse(s) => s.adjoint_mul_vec(x),
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        match self {
            GeneralMatrix::Dense(m) => m.clone(),
            GeneralMatrix::Sparse(s) => s.to_dense(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky_dense;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_dense<T: Scalar>(n: usize, seed: u64) -> DMatrix<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| T::sample_normal(&mut rng))
    }

    #[test]
    fn construction_symmetrizes_and_records_defect() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let op = HermitianOperator::from_dense(a).unwrap();
        assert_eq!(op.to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        assert_eq!(op.symmetry_defect(), 1.0);
    }

    #[test]
    fn sparse_matvec_agrees_with_dense() {
        for n in [1usize, 5, 64] {
            let d = random_dense::<f64>(n, n as u64);
            let dense = HermitianOperator::from_dense(d.clone()).unwrap();
            let sparse = HermitianOperator::from_sparse(CsrMatrix::from_dense(&d)).unwrap();
            let x = DVector::from_fn(n, |i, _| 1.0 / (1.0 + i as f64));
            let yd = dense.apply(&x);
            let ys = sparse.apply(&x);
            assert!((&yd - &ys).norm() <= 1e-13 * yd.norm().max(1.0));
        }
    }

    #[test]
    fn complex_rayleigh_quotients_are_real() {
        let n = 40;
        let op = HermitianOperator::from_dense(random_dense::<Complex64>(n, 11)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u = DVector::from_fn(n, |_, _| Complex64::sample_normal(&mut rng));
            let (re, im) = op.rayleigh_parts(&u);
            assert!(im.abs() <= 1e-12 * re.abs().max(1.0), "imaginary residue {im:e}");
        }
    }

    #[test]
    fn negation_is_bitwise_exact() {
        let op = Arc::new(HermitianOperator::from_dense(random_dense::<f64>(12, 2)).unwrap());
        let neg = Arc::new(op.negated());
        let negneg = neg.negated();
        let x = DVector::from_fn(12, |i, _| (i as f64).cos());
        assert_eq!(negneg.apply(&x), op.apply(&x));
        assert_eq!(neg.apply(&x), -op.apply(&x));
    }

    #[test]
    fn congruence_matches_explicit_product() {
        let n = 10;
        let a = HermitianOperator::from_dense(random_dense::<f64>(n, 8)).unwrap();
        let b = random_dense::<f64>(n, 9);
        let x = &b * b.transpose() + DMatrix::identity(n, n);
        let f = Arc::new(cholesky_dense(&x).unwrap());
        let l = f.factor_dense();
        let li = l.clone().try_inverse().unwrap();
        let explicit = &li * a.to_dense() * li.transpose();
        let op = HermitianOperator::congruence(Arc::new(a), f).unwrap();
        assert!((op.to_dense() - explicit).norm() <= 1e-10);
    }
}
