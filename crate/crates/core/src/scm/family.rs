use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, HermitianOperator, Scalar, Storage};
use crate::problems::expr::Expr;

/// `A(μ) = Σ_q θ_q(μ) A_q` with Hermitian terms of a common dimension.
#[derive(Clone, Debug)]
pub struct AffineFamily<T: Scalar = f64> {
    terms: Vec<Arc<HermitianOperator<T>>>,
    theta: Vec<Expr>,
    domain: Vec<(f64, f64)>,
    label: String,
}

impl<T: Scalar> AffineFamily<T> {
    pub fn new(terms: Vec<Arc<HermitianOperator<T>>>, theta: Vec<Expr>, domain: Vec<(f64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Argument("a family needs at least one term".into()));
        }
        if terms.len() != theta.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} terms but {} coefficient functions",
                terms.len(),
                theta.len()
            )));
        }
        let n = terms[0].dim();
        if let Some((q, t)) = terms.iter().enumerate().find(|(_, t)| t.dim() != n) {
            return Err(Error::DimensionMismatch(format!("term {} has dimension {}, term 1 has {n}", q + 1, t.dim())));
        }
        for (k, &(lo, hi)) in domain.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Argument(format!("domain interval {} is [{lo}, {hi}]", k + 1)));
            }
        }
        if let Some((q, e)) = theta.iter().enumerate().find(|(_, e)| e.arity() > domain.len()) {
            return Err(Error::DimensionMismatch(format!(
                "theta {} = {e} uses mu{} but the domain has {} parameters",
                q + 1,
                e.arity(),
                domain.len()
            )));
        }
        Ok(Self { terms, theta, domain, label: String::new() })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of affine terms `Q`.
    pub fn q(&self) -> usize {
        self.terms.len()
    }

    /// Number of parameters `P`.
    pub fn p(&self) -> usize {
        self.domain.len()
    }

    pub fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    pub fn terms(&self) -> &[Arc<HermitianOperator<T>>] {
        &self.terms
    }

    pub fn term(&self, q: usize) -> &Arc<HermitianOperator<T>> {
        &self.terms[q]
    }

    pub fn theta_exprs(&self) -> &[Expr] {
        &self.theta
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.p() && mu.iter().zip(&self.domain).all(|(m, (lo, hi))| lo <= m && m <= hi)
    }

    /// `θ(μ)`.
    pub fn theta(&self, mu: &[f64]) -> Result<Vec<f64>> {
        if mu.len() != self.p() {
            return Err(Error::DimensionMismatch(format!(
                "parameter has {} entries, family has {}",
                mu.len(),
                self.p()
            )));
        }
        self.theta.iter().map(|e| e.eval(mu)).collect()
    }

    /// `∂θ_q/∂μ_p` as a `P`-list of `Q`-vectors.
    pub fn theta_gradient(&self, mu: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..self.p()).map(|p| self.theta.iter().map(|e| e.derivative(p).eval(mu)).collect()).collect()
    }

    /// `A(μ)`. Dense or sparse terms are combined entrywise; mixed or
    /// operator-form terms give an operator sum.
    pub fn assemble(&self, mu: &[f64]) -> Result<HermitianOperator<T>> {
        let th = self.theta(mu)?;
        self.combine(&th)
    }

    pub fn combine(&self, coeffs: &[f64]) -> Result<HermitianOperator<T>> {
        if self.terms.iter().all(|t| t.is_dense()) {
            return Ok(HermitianOperator::dense_trusted(self.combine_dense(coeffs)));
        }
        let sparse: Option<Vec<(f64, &CsrMatrix<T>)>> = coeffs
            .iter()
            .zip(&self.terms)
            .map(|(c, t)| match t.storage() {
                Storage::Sparse(s) => Some((*c, s)),
                _ => None,
            })
            .collect();
        if let Some(parts) = sparse {
            return Ok(HermitianOperator::sparse_trusted(CsrMatrix::linear_combination(&parts)?));
        }
        HermitianOperator::sum(coeffs.iter().copied().zip(self.terms.iter().cloned()).collect())
    }

    pub fn assemble_dense(&self, mu: &[f64]) -> Result<DMatrix<T>> {
        let th = self.theta(mu)?;
        Ok(self.combine_dense(&th))
    }

    /// `Σ_q c_q A_q` formed densely.
    pub fn combine_dense(&self, coeffs: &[f64]) -> DMatrix<T> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for (c, t) in coeffs.iter().zip(&self.terms) {
            if *c == 0.0 {
                continue;
            }
            match t.storage() {
                Storage::Dense(m) => out.zip_apply(m, |o, v| *o += v.scale(*c)),
                _ => out += t.to_dense().scale(*c),
            }
        }
        out
    }

    /// `R(u) = (u*A_q u / u*u)_q`.
    pub fn rayleigh_vector(&self, u: &DVector<T>) -> Result<Vec<f64>> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("vector of length {} for dimension {}", u.len(), self.dim())));
        }
        if !(u.norm() > 0.0) {
            return Err(Error::Argument("Rayleigh quotient of the zero vector".into()));
        }
        Ok(self.terms.iter().map(|t| t.rayleigh(u)).collect())
    }

    /// Largest relative symmetry defect `‖A(μ) − A(μ)ᴴ‖_max / ‖A(μ)‖_max`
    /// over `probes` random parameters, measured through products with
    /// random vectors so operator-form terms are covered too.
    pub fn symmetry_probe(&self, probes: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let mut worst = 0.0f64;
        for _ in 0..probes {
            let mu = self.random_point(&mut rng);
            let a = self.assemble(&mu)?;
            let x = DVector::from_fn(n, |_, _| T::sample_normal(&mut rng));
            let y = DVector::from_fn(n, |_, _| T::sample_normal(&mut rng));
            let ax = a.apply(&x);
            let ay = a.apply(&y);
            let lhs = y.dotc(&ax);
            let rhs = ay.dotc(&x);
            let scale = ax.norm() * y.norm() + ay.norm() * x.norm();
            if scale > 0.0 {
                worst = worst.max((lhs - rhs).modulus() / scale);
            }
        }
        Ok(worst)
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.domain.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect()
    }

    /// A copy with the terms replaced (same coefficients and domain).
    pub fn with_terms(&self, terms: Vec<Arc<HermitianOperator<T>>>) -> Result<Self> {
        Ok(Self::new(terms, self.theta.clone(), self.domain.clone())?.with_label(self.label.clone()))
    }
}
