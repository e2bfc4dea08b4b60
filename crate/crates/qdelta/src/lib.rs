//! Lattice points on ternary affine quadrics F(x) = m₀N under congruence
//! conditions, counted directly and through the smoothed delta expansion.

pub mod arch;
pub mod config;
pub mod error;
pub mod expsums;
pub mod instance;
pub mod localdens;
pub mod modarith;
pub mod numerics;
pub mod pipeline;
pub mod qform;

pub use config::Config;
pub use error::{Error, Result};
pub use instance::{CongruenceDatum, ProblemInstance};
pub use qform::QForm;
