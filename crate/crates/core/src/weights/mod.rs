//! Weights `ω(t, x)`, their duals `σ = ω^{−p′/p}`, and the quadrature-based
//! diagnostics built on them.

mod catalog;
mod diagnostics;
mod exponents;
pub mod quadrature;

pub use catalog::{SingularSet, Weight, WeightFn, WeightRegistry, WeightSpec};
pub use diagnostics::{
    a_infinity_estimate, doubling_estimate, intrinsic_family, muckenhoupt_constant,
    AInfinityEstimate, DoublingEntry, DoublingReport, MuckenhouptEntry, MuckenhouptReport, SubBox,
};
pub use exponents::{Exponents, Rejection};
pub use quadrature::{cylinder_average, Integral, QuadratureSpec, Rule};
