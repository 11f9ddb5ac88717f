pub mod certificate;
pub mod cli;
pub mod concentration;
pub mod dyadic;
pub mod error;
pub mod families;
pub mod mixed;
pub mod multiplier;
pub mod op1;
pub mod pipeline;
pub mod scalar;
pub mod stepfun;

pub use error::{Error, Result};
