//! Classical successive constraint method.

mod bbox;
mod family;
mod greedy;
mod state;
mod training;
mod worst_case;

pub use bbox::{compute_bounding_box, BoundingBox};
pub use family::AffineFamily;
pub use greedy::scm_greedy;
pub use state::{lower_bound, lower_bound_at, rayleigh_vector, upper_bound, upper_bound_at, ScmSample, ScmState};
pub use training::{TrainingSet, DEFAULT_TRAINING_SIZE};
pub use worst_case::worst_case_family;
