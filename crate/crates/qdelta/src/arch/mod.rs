//! Archimedean side: the weight, the delta kernel and oscillatory integrals.

pub mod kernel;
pub mod osc;
pub mod singular;
pub mod weight;

pub use kernel::DeltaKernel;
pub use osc::{osc_integral, osc_integral_fixed, Estimate, HProfile, OscTransform, QuadratureSpec};
pub use singular::{j_integrals, singular_integral, JIntegrals, RGrid, SingularIntegral};
pub use weight::{mollifier, Profile, WeightSpec};
