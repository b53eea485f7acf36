use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver did not converge after {restarts} restarts (worst relative residual {worst_residual:.3e})")]
    EigenNotConverged { restarts: usize, values: Vec<f64>, residuals: Vec<f64>, worst_residual: f64 },

    #[error("matrix is not positive definite: pivot {pivot} is {value:.6e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("linear program is infeasible: {0}")]
    LpInfeasible(String),

    #[error("linear program solver failure: {0}")]
    LpInternal(String),

    #[error("term {term}: {source}")]
    Term { term: usize, source: Box<Error> },

    #[error("sample {index}: {source}")]
    Sample { index: usize, source: Box<Error> },

    #[error("parse error at offset {offset}: {message} (expected one of: {})", expected.join(", "))]
    Parse { offset: usize, message: String, expected: Vec<String> },

    #[error("expression evaluation failed: {0}")]
    Evaluation(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{path}, line {line}: {message}")]
    MatrixMarket { path: String, line: usize, message: String },

    #[error("manifest field `{field}`: {message}")]
    Manifest { field: String, message: String },

    #[error("manifest field `{field}`: {source}")]
    InField { field: String, source: Box<Error> },

    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), message: err.to_string() }
    }

    /// The manifest field an error refers to, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Manifest { field, .. } | Error::InField { field, .. } => Some(field),
            _ => None,
        }
    }

    /// Short machine-readable identifier used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::EigenNotConverged { .. } => "eigensolver_not_converged",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::LpInfeasible(_) => "lp_infeasible",
            Error::LpInternal(_) => "lp_internal",
            Error::Term { source, .. } | Error::Sample { source, .. } | Error::InField { source, .. } => source.kind(),
            Error::Parse { .. } => "parse",
            Error::Evaluation(_) => "evaluation",
            Error::Io { .. } => "io",
            Error::MatrixMarket { .. } => "matrix_market",
            Error::Manifest { .. } => "manifest",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::Internal(_) => "internal",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_field_errors_keep_the_inner_kind() {
        let inner = Error::DimensionMismatch("term_2.mtx is 3x3".into());
        let e = Error::InField { field: "terms[1]".into(), source: Box::new(inner) };
        assert_eq!(e.kind(), "dimension_mismatch");
        assert_eq!(e.field(), Some("terms[1]"));
        assert!(e.to_string().contains("term_2.mtx"));
        assert_eq!(Error::Argument("x".into()).field(), None);
    }
}
