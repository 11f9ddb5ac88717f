//! Truncated `L₁(X)`: grid functions, block operators, norm bounds and
//! tensor transfer maps.

mod function;
mod norm;
mod operator;
mod transfer;

pub use function::{embed_j, project_q, MixedFunction};
pub use norm::{
    collapse_bound, diagonal_norm_bound, distance_upper_bound, exact_l1l1_norm, mixed_norm_bounds, norm_upper_bound, xdiagonal_distance, CollapseBound,
    NormBounds,
};
pub use operator::{memory_estimate, MixedOperator, DEFAULT_MEMORY_LIMIT, DENSE_CAP};
pub use transfer::{InnerFactor, InnerMap, MixedDomain, TensorMap};
