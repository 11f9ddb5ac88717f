//! Operators on truncated `L₁` in the Haar basis.

mod faithful;
mod icebreaker;
mod operator;

pub(crate) use faithful::greedy_system;
pub use faithful::{
    achieved_pairings, build_faithful_system, build_system_for_family, canonical_system, conjugate, default_schedule, distributionally_equivalent, embedding,
    is_scalar, left_inverse, projection, BuilderConfig, FamilyMember, Pairing,
};
pub use icebreaker::{icebreaker, IcebreakerBudget, IcebreakerOutcome};
pub use operator::{integral_functional, l1_norm_f64, l1_operator_norm_exact, nearest_multiplier, L1Operator};
