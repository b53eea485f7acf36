//! Subspace-accelerated bounds: Ritz values of the projection onto the
//! sampled eigenvectors from above, and a residual-corrected LP bound from below.

mod bounds;
mod greedy;
mod pool;

pub use bounds::{
    beta_gap, eta_estimate, f_bound, residual_heuristic_bound, residual_norm, ritz_upper_bound, subspace_lower_bound,
    RitzData, SubspaceBound, RHO_CLAMP, RHO_REFINE,
};
pub use greedy::{subspace_greedy, SelectionMode, SubspaceOptions};
pub use pool::{SubspacePool, SubspaceSample, APPEND_DROP_TOL};
