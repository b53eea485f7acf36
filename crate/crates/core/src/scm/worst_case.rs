use std::sync::Arc;

use nalgebra::DMatrix;

use super::{AffineFamily, ScmState};
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize_against, HermitianOperator, Scalar};

/// Family with the same samples and the same lower bound at `mu_tilde`,
/// whose smallest eigenvalue at `mu_tilde` equals that lower bound:
/// `Ā_q = VVᴴA_qVVᴴ + y_q (I − VVᴴ)` for an orthonormal basis `V` of the
/// sampled eigenvectors and the LP minimizer `y` at `mu_tilde`.
pub fn worst_case_family<T: Scalar>(
    state: &ScmState<T>,
    family: &AffineFamily<T>,
    mu_tilde: &[f64],
    y: &[f64],
) -> Result<AffineFamily<T>> {
    let n = family.dim();
    let j = state.len();
    if j >= n {
        return Err(Error::Argument(format!("{j} samples leave no complement in dimension {n}")));
    }
    if y.len() != family.q() {
        return Err(Error::DimensionMismatch(format!("minimizer has {} entries, expected {}", y.len(), family.q())));
    }
    if !family.contains(mu_tilde) {
        return Err(Error::Argument(format!("{mu_tilde:?} lies outside the domain")));
    }
    let vecs = if j == 0 {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&state.samples.iter().map(|s| s.vector.clone()).collect::<Vec<_>>())
    };
    let (v, _) = orthonormalize_against(&DMatrix::zeros(n, 0), &vecs, 1e-12);
    let proj = &v * v.adjoint();
    let comp = DMatrix::<T>::identity(n, n) - &proj;
    let terms = family
        .terms()
        .iter()
        .zip(y)
        .map(|(a, &yq)| {
            let av = a.apply_block(&v);
            let inner = v.adjoint() * av;
            let m = &v * inner * v.adjoint() + comp.scale(yq);
            HermitianOperator::from_dense(m).map(Arc::new)
        })
        .collect::<Result<Vec<_>>>()?;
    family.with_terms(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dense_eigenvalues, EigenOptions};
    use crate::problems::make_random_family;
    use crate::scm::{compute_bounding_box, lower_bound};

    #[test]
    fn attains_the_lower_bound() {
        let f = make_random_family(2, 12, 1.0, 4).unwrap();
        let b = compute_bounding_box(&f, &EigenOptions::default()).unwrap();
        let mut s = ScmState::new();
        for mu in [[0.1], [0.9]] {
            s.add_sample(&f, &mu, &EigenOptions::default()).unwrap();
        }
        let mu = [0.5];
        let (lb, lp) = lower_bound(&s, &f, &b, &mu).unwrap();
        let w = worst_case_family(&s, &f, &mu, lp.y.as_slice()).unwrap();
        let at = |g: &AffineFamily<f64>, m: &[f64]| dense_eigenvalues(&g.assemble_dense(m).unwrap())[0];
        assert!((at(&w, &mu) - lb).abs() < 1e-8);
        for sample in &s.samples {
            assert!((at(&w, &sample.mu) - sample.lambda).abs() < 1e-8);
        }
    }

    #[test]
    fn needs_room_for_a_complement() {
        let f = make_random_family(2, 2, 1.0, 4).unwrap();
        let mut s = ScmState::new();
        for mu in [[0.1], [0.9]] {
            s.add_sample(&f, &mu, &crate::linalg::EigenOptions::default()).unwrap();
        }
        assert!(worst_case_family(&s, &f, &[0.5], &[0.0, 0.0]).is_err());
    }
}
