//! Reductions of generalized eigenvalue and singular value problems to the
//! standard Hermitian form.

use std::sync::Arc;

use super::expr::Expr;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, CholeskyFactor, GeneralMatrix, HermitianOperator, Scalar};
use crate::scm::AffineFamily;

/// `inf_v v*A(μ)v / v*Xv` for a Hermitian family and an SPD inner-product matrix.
#[derive(Clone, Debug)]
pub struct GeneralizedProblem<T: Scalar = f64> {
    pub family: AffineFamily<T>,
    pub inner_product: Arc<HermitianOperator<T>>,
}

impl<T: Scalar> GeneralizedProblem<T> {
    pub fn new(family: AffineFamily<T>, inner_product: Arc<HermitianOperator<T>>) -> Result<Self> {
        if inner_product.dim() != family.dim() {
            return Err(Error::DimensionMismatch(format!(
                "inner product has dimension {}, family has {}",
                inner_product.dim(),
                family.dim()
            )));
        }
        Ok(Self { family, inner_product })
    }
}

/// Family with terms `L⁻¹A_qL⁻ᴴ` for `X = LLᴴ`, applied through triangular
/// solves. Its smallest eigenvalue is the smallest generalized eigenvalue of
/// `(A(μ), X)`.
pub fn coercivity_transform<T: Scalar>(g: &GeneralizedProblem<T>) -> Result<AffineFamily<T>> {
    let factor = Arc::new(cholesky(&g.inner_product)?);
    coercivity_transform_with(&g.family, factor)
}

pub fn coercivity_transform_with<T: Scalar>(
    family: &AffineFamily<T>,
    factor: Arc<CholeskyFactor<T>>,
) -> Result<AffineFamily<T>> {
    let terms = family
        .terms()
        .iter()
        .map(|a| HermitianOperator::congruence(Arc::clone(a), Arc::clone(&factor)).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    Ok(family.with_terms(terms)?.with_label(format!("coercivity({})", family.label())))
}

/// The `(i, j)` index pairs of the `Q²` products `C_iᴴC_j`, row-major.
pub fn expansion_pairs(q: usize) -> Vec<(usize, usize)> {
    (0..q).flat_map(|i| (0..q).map(move |j| (i, j))).collect()
}

/// `C(μ)ᴴC(μ)` for `C(μ) = Σ θ_q(μ) L⁻¹A_qL⁻ᴴ` with `X = LLᴴ` and general
/// square `A_q`. The `Q²` products are stored as `Q(Q+1)/2` Hermitian terms:
/// `C_iᴴC_i` with coefficient `θ_i²` and `C_iᴴC_j + C_jᴴC_i` with `θ_iθ_j`
/// for `i < j`. The smallest eigenvalue is `σ_min(C(μ))²`.
pub fn singular_value_expansion<T: Scalar>(
    terms: Vec<Arc<GeneralMatrix<T>>>,
    theta: Vec<Expr>,
    domain: Vec<(f64, f64)>,
    inner_product: &HermitianOperator<T>,
) -> Result<AffineFamily<T>> {
    if terms.len() != theta.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} terms but {} coefficient functions",
            terms.len(),
            theta.len()
        )));
    }
    let factor = Arc::new(cholesky(inner_product)?);
    let q = terms.len();
    let mut out_terms = Vec::with_capacity(q * (q + 1) / 2);
    let mut out_theta = Vec::with_capacity(q * (q + 1) / 2);
    for i in 0..q {
        for j in i..q {
            let op = HermitianOperator::normal_product(
                Arc::clone(&terms[i]),
                Arc::clone(&terms[j]),
                Arc::clone(&factor),
                i == j,
            )
            .map_err(|e| Error::Term { term: i + 1, source: Box::new(e) })?;
            out_terms.push(Arc::new(op));
            out_theta.push(Expr::product(theta[i].clone(), theta[j].clone()));
        }
    }
    Ok(AffineFamily::new(out_terms, out_theta, domain)?.with_label("singular-value expansion"))
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::linalg::dense_eigenvalues;
    use crate::problems::{make_random_family, parse_theta};

    #[test]
    fn scaled_inner_product_scales_eigenvalues() {
        let f = make_random_family(3, 10, 0.5, 6).unwrap();
        let x = Arc::new(HermitianOperator::<f64>::diagonal(&[4.0; 10]));
        let g = coercivity_transform(&GeneralizedProblem::new(f.clone(), x).unwrap()).unwrap();
        let mu = [0.2, 0.3];
        let a = dense_eigenvalues(&f.assemble_dense(&mu).unwrap());
        let b = dense_eigenvalues(&g.assemble_dense(&mu).unwrap());
        for (u, v) in a.iter().zip(&b) {
            assert!((u / 4.0 - v).abs() < 1e-13);
        }
    }

    #[test]
    fn inner_product_dimension_is_checked() {
        let f = make_random_family(2, 5, 0.5, 6).unwrap();
        let x = Arc::new(HermitianOperator::identity(4));
        assert!(GeneralizedProblem::new(f, x).is_err());
    }

    #[test]
    fn expansion_gives_squared_singular_values() {
        let a1 = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0, 3.0, 0.0, 1.0]);
        let a2 = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, -2.0, 0.0, 0.5, 1.0, 1.0, 0.0]);
        let terms = vec![Arc::new(GeneralMatrix::Dense(a1.clone())), Arc::new(GeneralMatrix::Dense(a2.clone()))];
        let theta = vec![parse_theta("1").unwrap(), parse_theta("mu1").unwrap()];
        let f = singular_value_expansion(terms, theta, vec![(-1.0, 1.0)], &HermitianOperator::identity(3)).unwrap();
        assert_eq!(f.q(), 3);
        for mu in [-0.7, 0.0, 0.4] {
            let sigma = (&a1 + a2.scale(mu)).singular_values().min();
            let lam = dense_eigenvalues(&f.assemble_dense(&[mu]).unwrap())[0];
            assert!((lam.max(0.0).sqrt() - sigma).abs() < 1e-12, "{mu}: {lam} vs {sigma}");
        }
        assert_eq!(expansion_pairs(3).len(), 9);
    }
}
