use nalgebra::DMatrix;

use super::Scalar;
use crate::error::Error;

/// Eigensolver tolerance used throughout unless a caller overrides it.
pub const DEFAULT_EIG_TOL: f64 = 1e-6;

/// The `k` smallest eigenpairs of a Hermitian operator, ascending.
#[derive(Clone, Debug)]
pub struct EigenPairs<T: Scalar = f64> {
    pub values: Vec<f64>,
    /// `N × k`, orthonormal columns.
    pub vectors: DMatrix<T>,
    /// `‖A v_j − λ_j v_j‖₂` per pair.
    pub residuals: Vec<f64>,
    /// Cheap lower estimate of `‖A‖₂` (largest Ritz value magnitude seen).
    pub norm_estimate: f64,
}

impl<T: Scalar> EigenPairs<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_relative_residual(&self) -> f64 {
        let scale = self.norm_estimate.max(f64::MIN_POSITIVE);
        self.residuals.iter().fold(0.0f64, |m, r| m.max(r / scale))
    }
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Relative residual tolerance: `‖Av − λv‖ ≤ tol · ‖A‖` for every pair.
    pub tol: f64,
    pub seed: u64,
    /// Defaults to `k + 2`.
    pub block_size: Option<usize>,
    /// Largest basis built before a thick restart.
    pub max_basis: Option<usize>,
    /// Defaults to `50 k`.
    pub max_restarts: Option<usize>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_EIG_TOL, seed: 0x5eed_1a2c, block_size: None, max_basis: None, max_restarts: None }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug)]
pub enum EigenError<T: Scalar> {
    Argument(String),
    /// The iteration cap was hit; `best` holds the last Ritz pairs.
    NotConverged {
        best: EigenPairs<T>,
        restarts: usize,
    },
}

impl<T: Scalar> From<EigenError<T>> for Error {
    fn from(e: EigenError<T>) -> Self {
        match e {
            EigenError::Argument(msg) => Error::Argument(msg),
            EigenError::NotConverged { best, restarts } => Error::EigenNotConverged {
                restarts,
                worst_residual: best.max_relative_residual(),
                values: best.values,
                residuals: best.residuals,
            },
        }
    }
}

impl<T: Scalar> std::fmt::Display for EigenError<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EigenError::Argument(msg) => write!(f, "invalid argument: {msg}"),
            EigenError::NotConverged { best, restarts } => write!(
                f,
                "not converged after {restarts} restarts (worst relative residual {:.3e})",
                best.max_relative_residual()
            ),
        }
    }
}
