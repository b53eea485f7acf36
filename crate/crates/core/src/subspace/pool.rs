use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    dense_eigenvalues, hcat, lowest_eigpairs, orthonormalize_against, EigenOptions, EigenPairs, Scalar,
};
use crate::scm::{AffineFamily, ScmState};

/// Relative norm below which a new eigenvector counts as already spanned.
pub const APPEND_DROP_TOL: f64 = 1e-10;

/// Per-sample data beyond the classical method's.
#[derive(Clone, Debug)]
pub struct SubspaceSample<T: Scalar = f64> {
    /// `λ^(1) ≤ … ≤ λ^(ℓ+1)`.
    pub values: Vec<f64>,
    /// The `ℓ` retained eigenvectors.
    pub vectors: DMatrix<T>,
    /// `VᴴV_i`, grown with the basis.
    pub coeffs: DMatrix<T>,
    /// Basis columns this sample contributed.
    pub new_columns: usize,
}

impl<T: Scalar> SubspaceSample<T> {
    /// `λ_i^(ℓ+1)`.
    pub fn next_value(&self) -> f64 {
        *self.values.last().expect("at least one value")
    }
}

/// Orthonormal basis `V` of the retained eigenvectors of all samples, with
/// the projections `M_q = VᴴA_qV` and `G_qq' = (A_qV)ᴴ(A_q'V)` that make every
/// per-parameter computation independent of `N`.
#[derive(Clone, Debug)]
pub struct SubspacePool<T: Scalar = f64> {
    ell: usize,
    scm: ScmState<T>,
    extra: Vec<SubspaceSample<T>>,
    basis: DMatrix<T>,
    /// `A_q V`.
    images: Vec<DMatrix<T>>,
    reduced: Vec<DMatrix<T>>,
    /// `G_qq'` for `q ≤ q'`, row-major over the upper triangle.
    cross: Vec<DMatrix<T>>,
    q: usize,
}

fn pair_index(q: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * q - a * (a + 1) / 2 + b
}

impl<T: Scalar> SubspacePool<T> {
    pub fn new(family: &AffineFamily<T>, ell: usize) -> Result<Self> {
        if ell == 0 {
            return Err(Error::Argument("need at least one eigenpair per sample".into()));
        }
        let n = family.dim();
        let q = family.q();
        Ok(Self {
            ell,
            scm: ScmState::new(),
            extra: Vec::new(),
            basis: DMatrix::zeros(n, 0),
            images: vec![DMatrix::zeros(n, 0); q],
            reduced: vec![DMatrix::zeros(0, 0); q],
            cross: vec![DMatrix::zeros(0, 0); q * (q + 1) / 2],
            q,
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Basis dimension `m ≤ Jℓ`.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn len(&self) -> usize {
        self.scm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scm.is_empty()
    }

    pub fn scm(&self) -> &ScmState<T> {
        &self.scm
    }

    pub fn sample(&self, i: usize) -> &SubspaceSample<T> {
        &self.extra[i]
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    pub fn reduced(&self, q: usize) -> &DMatrix<T> {
        &self.reduced[q]
    }

    /// `G_qq'`, formed from the stored upper triangle.
    pub fn cross(&self, a: usize, b: usize) -> DMatrix<T> {
        let g = &self.cross[pair_index(self.q, a, b)];
        if a <= b {
            g.clone()
        } else {
            g.adjoint()
        }
    }

    /// `Σ θ_q M_q = VᴴA(μ)V`.
    pub fn reduced_matrix(&self, theta: &[f64]) -> DMatrix<T> {
        let m = self.dim();
        let mut h = DMatrix::zeros(m, m);
        for (c, mq) in theta.iter().zip(&self.reduced) {
            h.zip_apply(mq, |o, v| *o += v.scale(*c));
        }
        h
    }

    /// `Σ θ_qθ_q' G_qq' = VᴴA(μ)ᴴA(μ)V`.
    pub fn cross_matrix(&self, theta: &[f64]) -> DMatrix<T> {
        let m = self.dim();
        let mut t = DMatrix::zeros(m, m);
        for a in 0..self.q {
            for b in a..self.q {
                let g = &self.cross[pair_index(self.q, a, b)];
                let c = theta[a] * theta[b];
                if c == 0.0 {
                    continue;
                }
                if a == b {
                    t.zip_apply(g, |o, v| *o += v.scale(c));
                } else {
                    let gh = g.adjoint();
                    t.zip_zip_apply(g, &gh, |o, v, w| *o += (v + w).scale(c));
                }
            }
        }
        t
    }

    /// `‖A(μ)VW − VWΛ‖₂` formed from the stored images `A_qV`. Costs
    /// `O(NmrQ)`; used only where the reduced formula loses its digits.
    pub fn explicit_residual(&self, theta: &[f64], w: &DMatrix<T>, values: &[f64]) -> f64 {
        let n = self.basis.nrows();
        let mut r = DMatrix::zeros(n, w.ncols());
        for (c, img) in theta.iter().zip(&self.images) {
            if *c != 0.0 {
                r += (img * w).scale(*c);
            }
        }
        let u = &self.basis * w;
        for (j, v) in values.iter().enumerate() {
            let mut col = r.column_mut(j);
            col.axpy(T::from_real(-v), &u.column(j), T::one());
        }
        let gram = r.ad_mul(&r);
        dense_eigenvalues(&gram).last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        self.scm.contains(mu)
    }

    /// Solves for `ℓ+1` eigenvalues and `ℓ` eigenvectors at `mu` and adds the
    /// sample. Returns the number of basis columns added.
    pub fn append_sample(&mut self, family: &AffineFamily<T>, mu: &[f64], opts: &EigenOptions) -> Result<usize> {
        if self.contains(mu) {
            return Err(Error::Argument(format!("{mu:?} is already a sample")));
        }
        let a = family.assemble(mu)?;
        let pairs = lowest_eigpairs(&a, self.ell + 1, opts)
            .map_err(|e| Error::Sample { index: self.len(), source: Box::new(e) })?;
        self.append_solved(family, mu, pairs)
    }

    /// Adds a sample from eigenpairs already computed at `mu`.
    pub fn append_solved(&mut self, family: &AffineFamily<T>, mu: &[f64], pairs: EigenPairs<T>) -> Result<usize> {
        let n = family.dim();
        let ell = self.ell.min(pairs.len());
        if ell == 0 {
            return Err(Error::Argument("no eigenpairs supplied".into()));
        }
        let mut values = pairs.values.clone();
        values.truncate(self.ell + 1);
        while values.len() < self.ell + 1 {
            // The space is exhausted; any value above the last one is valid.
            values.push(*values.last().expect("nonempty"));
        }
        let vectors = pairs.vectors.columns(0, ell).clone_owned();
        self.scm.add_solved(family, mu, &pairs)?;

        let (fresh, _) = orthonormalize_against(&self.basis, &vectors, APPEND_DROP_TOL);
        let added = fresh.ncols();
        if added > 0 {
            let old = self.dim();
            let new_images: Vec<DMatrix<T>> = family.terms().iter().map(|t| t.apply_block(&fresh)).collect();
            self.basis = hcat(&self.basis, &fresh);
            for ((img, red), new) in self.images.iter_mut().zip(&mut self.reduced).zip(&new_images) {
                *img = hcat(img, new);
                let cols = self.basis.ad_mul(new);
                *red = extend_hermitian(red, &cols, old);
            }
            for a in 0..self.q {
                for b in a..self.q {
                    let idx = pair_index(self.q, a, b);
                    // New columns of G_ab and new rows (adjoint of new columns of G_ba).
                    let cols = self.images[a].ad_mul(&new_images[b]);
                    let rows = self.images[b].columns(0, old).ad_mul(&new_images[a]);
                    self.cross[idx] = extend_general(&self.cross[idx], &cols, &rows, old);
                }
            }
            for s in &mut self.extra {
                let more = fresh.ad_mul(&s.vectors);
                s.coeffs = vcat(&s.coeffs, &more);
            }
        }
        let coeffs = self.basis.ad_mul(&vectors);
        self.extra.push(SubspaceSample { values, vectors, coeffs, new_columns: added });
        debug_assert_eq!(n, self.basis.nrows());
        Ok(added)
    }
}

/// Grows an `old × old` Hermitian matrix by the new columns `cols` (`m × add`).
fn extend_hermitian<T: Scalar>(prev: &DMatrix<T>, cols: &DMatrix<T>, old: usize) -> DMatrix<T> {
    let m = cols.nrows();
    let add = m - old;
    let mut out = DMatrix::zeros(m, m);
    out.view_mut((0, 0), (old, old)).copy_from(prev);
    out.view_mut((0, old), (m, add)).copy_from(cols);
    let top = cols.rows(0, old).adjoint();
    out.view_mut((old, 0), (add, old)).copy_from(&top);
    let d = cols.rows(old, add).clone_owned();
    let sym = (&d + d.adjoint()).scale(0.5);
    out.view_mut((old, old), (add, add)).copy_from(&sym);
    out
}

/// Grows `prev` with new columns `cols` (`m × add`) and new rows given as the
/// adjoint of `rows` (`old × add`).
fn extend_general<T: Scalar>(prev: &DMatrix<T>, cols: &DMatrix<T>, rows: &DMatrix<T>, old: usize) -> DMatrix<T> {
    let m = cols.nrows();
    let add = m - old;
    let mut out = DMatrix::zeros(m, m);
    out.view_mut((0, 0), (old, old)).copy_from(prev);
    out.view_mut((0, old), (m, add)).copy_from(cols);
    out.view_mut((old, 0), (add, old)).copy_from(&rows.adjoint());
    out
}

fn vcat<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_indices_cover_upper_triangle() {
        let q = 4;
        let mut seen = Vec::new();
        for a in 0..q {
            for b in a..q {
                seen.push(pair_index(q, a, b));
            }
        }
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(pair_index(q, 3, 1), pair_index(q, 1, 3));
    }
}
