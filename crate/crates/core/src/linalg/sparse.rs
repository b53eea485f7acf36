use nalgebra::{DMatrix, DVector};

use super::Scalar;
use crate::error::{Error, Result};

/// Compressed sparse row storage. Column indices are sorted within each row and
/// duplicates are summed on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T: Scalar = f64> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(i, j, _) in &entries {
            if i >= nrows || j >= ncols {
                return Err(Error::Argument(format!("triplet ({i}, {j}) outside a {nrows}x{ncols} matrix")));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                let slot = values.last_mut().expect("duplicate follows an entry");
                *slot += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { nrows, ncols, row_ptr, col_idx, values })
    }

    pub fn from_dense(m: &DMatrix<T>) -> Self {
        let mut trip = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != T::zero() {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), trip).expect("indices in range")
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, T::one()))).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in sparse matvec");
        DVector::from_iterator(
            self.nrows,
            (0..self.nrows).map(|i| self.row(i).fold(T::zero(), |acc, (j, v)| acc + v * x[j])),
        )
    }

    pub fn mul_block(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.ncols, "dimension mismatch in sparse block product");
        let mut out = DMatrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let xc = x.column(c);
            for i in 0..self.nrows {
                out[(i, c)] = self.row(i).fold(T::zero(), |acc, (j, v)| acc + v * xc[j]);
            }
        }
        out
    }

    /// `selfᴴ x` without forming the adjoint.
    pub fn adjoint_mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.nrows, "dimension mismatch in sparse adjoint matvec");
        let mut out = DVector::zeros(self.ncols);
        for i in 0..self.nrows {
            let xi = x[i];
            for (j, v) in self.row(i) {
                out[j] += v.conjugate() * xi;
            }
        }
        out
    }

    pub fn adjoint_mul_block(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.nrows, "dimension mismatch in sparse adjoint product");
        let mut out = DMatrix::zeros(self.ncols, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                let xi = x[(i, c)];
                for (j, v) in self.row(i) {
                    out[(j, c)] += v.conjugate() * xi;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v.conjugate())))
            .expect("indices in range")
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = v.scale(s);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    /// Linear combination `Σ c_k M_k` of equally shaped sparse matrices.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix<T>)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::Argument("empty linear combination".into()));
        };
        let (n, m) = (first.nrows, first.ncols);
        if terms.iter().any(|(_, t)| t.nrows != n || t.ncols != m) {
            return Err(Error::Argument("sparse terms have different shapes".into()));
        }
        let trip = terms.iter().flat_map(|&(c, t)| t.triplets().map(move |(i, j, v)| (i, j, v.scale(c))));
        Self::from_triplets(n, m, trip)
    }

    /// Returns `(A + Aᴴ)/2` and the maximum Hermitian defect `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_part(&self) -> Result<(Self, f64)> {
        if self.nrows != self.ncols {
            return Err(Error::Argument(format!("matrix is {}x{}, expected square", self.nrows, self.ncols)));
        }
        let adj = self.adjoint();
        let half = 0.5;
        let sym = Self::linear_combination(&[(half, self), (half, &adj)])?;
        let diff = Self::linear_combination(&[(1.0, self), (-1.0, &adj)])?;
        Ok((sym, diff.max_abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::<f64>::from_triplets(2, 2, [(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        assert!(CsrMatrix::<f64>::from_triplets(2, 2, [(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -2.0, 3.0, 0.0, 5.0]);
        let s = CsrMatrix::from_dense(&d);
        let x = DVector::from_vec(vec![0.5, -1.0]);
        assert_eq!(s.mul_vec(&x), &d * &x);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(s.adjoint_mul_vec(&y), d.transpose() * &y);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mul_block(&b), &d * &b);
        assert_eq!(s.adjoint_mul_block(&DMatrix::identity(3, 3)), d.transpose());
    }

    #[test]
    fn hermitian_part_records_defect() {
        let s = CsrMatrix::<f64>::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 0.5)]).unwrap();
        let (h, defect) = s.hermitian_part().unwrap();
        assert_eq!(h.get(0, 1), 0.75);
        assert_eq!(h.get(1, 0), 0.75);
        assert_eq!(defect, 0.5);
    }
}
