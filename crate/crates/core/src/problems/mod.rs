//! Problem construction: coefficient expressions, synthetic families,
//! generalized and singular-value transforms, and manifest loading.

pub mod expr;
mod generators;
mod manifest;
mod transforms;

pub use expr::{parse_theta, Expr};
pub use generators::{
    make_1param_analytic, make_block_diffusion, make_elasticity_standin, make_example_2_3, make_fin_standin,
    make_random_family, make_thermal_block_standin, min_gap_on_grid, GAP_CHECK_POINTS,
};
pub use manifest::{load_family, write_manifest, GeneratorSpec, LoadedProblem, Manifest, Pipeline};
pub use transforms::{
    coercivity_transform, coercivity_transform_with, expansion_pairs, singular_value_expansion, GeneralizedProblem,
};
