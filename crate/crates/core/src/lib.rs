// Negated comparisons like `!(x > 0.0)` deliberately reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod greedy;
pub mod linalg;
pub mod lp;
pub mod problems;
pub mod report;
pub mod scm;
pub mod subspace;

pub use error::{Error, Result};
