use nalgebra::DVector;

use super::{AffineFamily, BoundingBox};
use crate::error::{Error, Result};
use crate::linalg::{lowest_eigpairs, EigenOptions, EigenPairs, Scalar};
use crate::lp::{lp_minimize_warm, LpOptions, LpProblem, LpSolution};

/// A greedy sample: the parameter, its smallest eigenpair and Rayleigh vector.
#[derive(Clone, Debug)]
pub struct ScmSample<T: Scalar = f64> {
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    pub lambda: f64,
    pub vector: DVector<T>,
    /// `R(v)`, a point of the joint numerical range inside the box.
    pub rayleigh: Vec<f64>,
    pub residual: f64,
}

/// Samples collected so far, in insertion order.
#[derive(Clone, Debug, Default)]
pub struct ScmState<T: Scalar = f64> {
    pub samples: Vec<ScmSample<T>>,
}

impl<T: Scalar> ScmState<T> {
    pub fn new() -> Self {
        Self { samples: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        self.samples.iter().any(|s| s.mu == mu)
    }

    /// Solves for the smallest eigenpair at `mu` and appends it.
    pub fn add_sample(&mut self, f: &AffineFamily<T>, mu: &[f64], opts: &EigenOptions) -> Result<&ScmSample<T>> {
        let a = f.assemble(mu)?;
        let pairs =
            lowest_eigpairs(&a, 1, opts).map_err(|e| Error::Sample { index: self.len(), source: Box::new(e) })?;
        self.add_solved(f, mu, &pairs)
    }

    /// Appends a sample from an eigen-solve already performed at `mu`; only the
    /// leading pair is used.
    pub fn add_solved(&mut self, f: &AffineFamily<T>, mu: &[f64], pairs: &EigenPairs<T>) -> Result<&ScmSample<T>> {
        if pairs.is_empty() {
            return Err(Error::Argument("no eigenpairs supplied".into()));
        }
        let vector = pairs.vectors.column(0).clone_owned();
        let rayleigh = f.rayleigh_vector(&vector)?;
        self.samples.push(ScmSample {
            mu: mu.to_vec(),
            theta: f.theta(mu)?,
            lambda: pairs.values[0],
            vector,
            rayleigh,
            residual: pairs.residuals[0],
        });
        Ok(self.samples.last().expect("just pushed"))
    }

    /// The LP whose value is the lower bound at coefficients `theta`.
    pub fn lp_problem(&self, bbox: &BoundingBox, theta: &[f64]) -> LpProblem {
        let mut p = LpProblem::new(theta.to_vec(), bbox.lower.clone(), bbox.upper.clone());
        p.rows = self.samples.iter().map(|s| (s.theta.clone(), s.lambda)).collect();
        p
    }
}

/// `R_of`: Rayleigh vector of `u`.
pub fn rayleigh_vector<T: Scalar>(f: &AffineFamily<T>, u: &DVector<T>) -> Result<Vec<f64>> {
    f.rayleigh_vector(u)
}

/// `min_i θᵀR(v_i)`; `+∞` with no samples.
pub fn upper_bound_at<T: Scalar>(state: &ScmState<T>, theta: &[f64]) -> f64 {
    state.samples.iter().map(|s| dot(theta, &s.rayleigh)).fold(f64::INFINITY, f64::min)
}

pub fn upper_bound<T: Scalar>(state: &ScmState<T>, f: &AffineFamily<T>, mu: &[f64]) -> Result<f64> {
    Ok(upper_bound_at(state, &f.theta(mu)?))
}

/// LP lower bound at coefficients `theta`, optionally reusing `previous`.
pub fn lower_bound_at<T: Scalar>(
    state: &ScmState<T>,
    bbox: &BoundingBox,
    theta: &[f64],
    previous: Option<&LpSolution>,
    opts: &LpOptions,
) -> Result<LpSolution> {
    lp_minimize_warm(&state.lp_problem(bbox, theta), previous, opts)
}

pub fn lower_bound<T: Scalar>(
    state: &ScmState<T>,
    f: &AffineFamily<T>,
    bbox: &BoundingBox,
    mu: &[f64],
) -> Result<(f64, LpSolution)> {
    let sol = lower_bound_at(state, bbox, &f.theta(mu)?, None, &LpOptions::default())?;
    Ok((sol.value, sol))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
