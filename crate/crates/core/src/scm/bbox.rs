use serde::{Deserialize, Serialize};

use super::AffineFamily;
use crate::error::{Error, Result};
use crate::linalg::{extreme_eigs, EigenOptions, Scalar};

/// `B = Π_q [λ_min(A_q), λ_max(A_q)]`, which contains every Rayleigh vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    pub fn q(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        y.len() == self.q()
            && y.iter().enumerate().all(|(q, v)| {
                let slack = tol * (1.0 + self.lower[q].abs().max(self.upper[q].abs()));
                self.lower[q] - slack <= *v && *v <= self.upper[q] + slack
            })
    }
}

/// Extreme eigenvalues of every term, computed in parallel.
pub fn compute_bounding_box<T: Scalar>(f: &AffineFamily<T>, opts: &EigenOptions) -> Result<BoundingBox> {
    use rayon::prelude::*;
    let pairs: Vec<Result<(f64, f64)>> = f
        .terms()
        .par_iter()
        .enumerate()
        .map(|(q, t)| extreme_eigs(t, opts).map_err(|e| Error::Term { term: q + 1, source: Box::new(e) }))
        .collect();
    let mut lower = Vec::with_capacity(f.q());
    let mut upper = Vec::with_capacity(f.q());
    for p in pairs {
        let (lo, hi) = p?;
        lower.push(lo);
        upper.push(hi);
    }
    Ok(BoundingBox { lower, upper })
}
