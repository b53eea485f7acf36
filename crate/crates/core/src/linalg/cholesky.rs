//! Cholesky factorization `X = L̃ L̃ᴴ` of a Hermitian positive definite matrix.
//!
//! Dense inputs use a left-looking column factorization. Sparse inputs are
//! reordered with reverse Cuthill–McKee and factored inside their envelope
//! (profile) so fill stays bounded by the bandwidth of the reordered matrix.
//! In both cases the factor is exposed through the original ordering:
//! `L̃ = Pᵀ L` where `P X Pᵀ = L Lᴴ`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{CsrMatrix, HermitianOperator, Scalar, Storage};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CholeskyFactor<T: Scalar = f64> {
    dim: usize,
    kind: FactorKind<T>,
}

#[derive(Clone, Debug)]
enum FactorKind<T: Scalar> {
    Dense(DMatrix<T>),
    Envelope(EnvelopeFactor<T>),
}

/// Row-wise envelope storage of a lower triangular factor in permuted order.
/// Row `i` holds columns `first[i]..=i` at `values[start[i]..start[i + 1]]`.
#[derive(Clone, Debug)]
struct EnvelopeFactor<T: Scalar> {
    /// `perm[new] = old`.
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> EnvelopeFactor<T> {
    #[inline]
    fn row(&self, i: usize) -> &[T] {
        &self.values[self.start[i]..self.start[i + 1]]
    }

    #[inline]
    fn diag(&self, i: usize) -> f64 {
        self.values[self.start[i + 1] - 1].real()
    }

    /// Solves `L z = b` in permuted coordinates, in place.
    fn forward(&self, z: &mut [T]) {
        for i in 0..z.len() {
            let row = self.row(i);
            let f = self.first[i];
            let mut acc = z[i];
            for (k, l) in row[..row.len() - 1].iter().enumerate() {
                acc -= *l * z[f + k];
            }
            z[i] = acc.unscale(self.diag(i));
        }
    }

    /// Solves `Lᴴ x = z` in permuted coordinates, in place.
    fn backward(&self, x: &mut [T]) {
        for i in (0..x.len()).rev() {
            let xi = x[i].unscale(self.diag(i));
            x[i] = xi;
            let row = self.row(i);
            let f = self.first[i];
            for (k, l) in row[..row.len() - 1].iter().enumerate() {
                x[f + k] -= l.conjugate() * xi;
            }
        }
    }
}

impl<T: Scalar> CholeskyFactor<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fill-reducing permutation (`perm[new] = old`) for sparse factors.
    pub fn permutation(&self) -> Option<&[usize]> {
        match &self.kind {
            FactorKind::Dense(_) => None,
            FactorKind::Envelope(e) => Some(&e.perm),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.kind, FactorKind::Envelope(_))
    }

    /// Number of stored entries of the triangular factor.
    pub fn stored_entries(&self) -> usize {
        match &self.kind {
            FactorKind::Dense(_) => self.dim * (self.dim + 1) / 2,
            FactorKind::Envelope(e) => e.values.len(),
        }
    }

    /// `L̃⁻¹ v`.
    pub fn solve_lower(&self, v: &DVector<T>) -> DVector<T> {
        match &self.kind {
            FactorKind::Dense(l) => l.solve_lower_triangular(v).expect("Cholesky factor has a positive diagonal"),
            FactorKind::Envelope(e) => {
                let mut z: Vec<T> = e.perm.iter().map(|&old| v[old]).collect();
                e.forward(&mut z);
                DVector::from_vec(z)
            }
        }
    }

    /// `L̃⁻ᴴ v`.
    pub fn solve_lower_adjoint(&self, v: &DVector<T>) -> DVector<T> {
        match &self.kind {
            FactorKind::Dense(l) => l.ad_solve_lower_triangular(v).expect("Cholesky factor has a positive diagonal"),
            FactorKind::Envelope(e) => {
                let mut x: Vec<T> = v.iter().copied().collect();
                e.backward(&mut x);
                let mut out = DVector::zeros(self.dim);
                for (new, &old) in e.perm.iter().enumerate() {
                    out[old] = x[new];
                }
                out
            }
        }
    }

    pub fn solve_lower_block(&self, v: &DMatrix<T>) -> DMatrix<T> {
        match &self.kind {
            FactorKind::Dense(l) => l.solve_lower_triangular(v).expect("Cholesky factor has a positive diagonal"),
            FactorKind::Envelope(_) => map_columns(v, |c| self.solve_lower(&c)),
        }
    }

    pub fn solve_lower_adjoint_block(&self, v: &DMatrix<T>) -> DMatrix<T> {
        match &self.kind {
            FactorKind::Dense(l) => l.ad_solve_lower_triangular(v).expect("Cholesky factor has a positive diagonal"),
            FactorKind::Envelope(_) => map_columns(v, |c| self.solve_lower_adjoint(&c)),
        }
    }

    /// `X⁻¹ v` through two triangular solves.
    pub fn solve(&self, v: &DVector<T>) -> DVector<T> {
        self.solve_lower_adjoint(&self.solve_lower(v))
    }

    /// Dense copy of `L̃` in the original ordering (lower triangular only when
    /// no permutation was applied).
    pub fn factor_dense(&self) -> DMatrix<T> {
        match &self.kind {
            FactorKind::Dense(l) => l.clone(),
            FactorKind::Envelope(e) => {
                let mut out = DMatrix::zeros(self.dim, self.dim);
                for i in 0..self.dim {
                    let f = e.first[i];
                    for (k, &l) in e.row(i).iter().enumerate() {
                        out[(e.perm[i], f + k)] = l;
                    }
                }
                out
            }
        }
    }

    /// `L̃ L̃ᴴ`, for reconstruction checks.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let l = self.factor_dense();
        &l * l.adjoint()
    }
}

fn map_columns<T: Scalar>(v: &DMatrix<T>, f: impl Fn(DVector<T>) -> DVector<T>) -> DMatrix<T> {
    let cols: Vec<DVector<T>> = v.column_iter().map(|c| f(c.clone_owned())).collect();
    DMatrix::from_columns(&cols)
}

/// Factors a Hermitian positive definite operator. Sparse storage takes the
/// envelope path; dense and operator-form storage are factored densely.
pub fn cholesky<T: Scalar>(x: &HermitianOperator<T>) -> Result<CholeskyFactor<T>> {
    match x.storage() {
        Storage::Sparse(s) => cholesky_sparse(s),
        Storage::Dense(d) => cholesky_dense(d),
        _ => cholesky_dense(&x.to_dense()),
    }
}

pub fn cholesky_dense<T: Scalar>(a: &DMatrix<T>) -> Result<CholeskyFactor<T>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Argument(format!("Cholesky of a {}x{} matrix", n, a.ncols())));
    }
    let mut l = DMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut col = a.view((j, j), (n - j, 1)).clone_owned();
        if j > 0 {
            let lj = l.view((j, 0), (1, j)).adjoint();
            col -= l.view((j, 0), (n - j, j)) * lj;
        }
        let d = col[0].real();
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let s = d.sqrt();
        col.apply(|v| *v = v.unscale(s));
        col[0] = T::from_real(s);
        l.view_mut((j, j), (n - j, 1)).copy_from(&col);
    }
    Ok(CholeskyFactor { dim: n, kind: FactorKind::Dense(l) })
}

pub fn cholesky_sparse<T: Scalar>(a: &CsrMatrix<T>) -> Result<CholeskyFactor<T>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Argument(format!("Cholesky of a {}x{} matrix", n, a.ncols())));
    }
    let perm = reverse_cuthill_mckee(a);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }

    // Lower-triangle entries of P A Pᵀ, row by row.
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for (i, j, v) in a.triplets() {
        let (pi, pj) = (inv[i], inv[j]);
        if pj <= pi {
            rows[pi].push((pj, v));
        }
    }
    let mut first = vec![0usize; n];
    let mut start = vec![0usize; n + 1];
    for i in 0..n {
        first[i] = rows[i].iter().map(|&(j, _)| j).min().unwrap_or(i).min(i);
        start[i + 1] = start[i] + (i - first[i] + 1);
    }
    let mut values = vec![T::zero(); start[n]];
    for i in 0..n {
        for &(j, v) in &rows[i] {
            values[start[i] + j - first[i]] += v;
        }
    }

    let mut env = EnvelopeFactor { perm, first, start, values };
    for i in 0..n {
        let fi = env.first[i];
        for j in fi..i {
            let fj = env.first[j];
            let lo = fi.max(fj);
            let mut acc = env.values[env.start[i] + j - fi];
            for k in lo..j {
                acc -= env.values[env.start[i] + k - fi] * env.values[env.start[j] + k - fj].conjugate();
            }
            let djj = env.diag(j);
            env.values[env.start[i] + j - fi] = acc.unscale(djj);
        }
        let mut d = env.values[env.start[i + 1] - 1].real();
        for k in fi..i {
            d -= env.values[env.start[i] + k - fi].modulus_squared();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: env.perm[i], value: d });
        }
        env.values[env.start[i + 1] - 1] = T::from_real(d.sqrt());
    }
    Ok(CholeskyFactor { dim: n, kind: FactorKind::Envelope(env) })
}

/// Reverse Cuthill–McKee ordering of the symmetric sparsity pattern of `a`.
/// Returns `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for nb in &mut adj {
        nb.sort_unstable();
        nb.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &root in &by_degree {
        if seen[root] {
            continue;
        }
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}
