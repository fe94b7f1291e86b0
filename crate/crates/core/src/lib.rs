//! Numerical laboratory for the weighted doubly nonlinear parabolic equation
//!
//! ```text
//! div A(t, x, u, ∇u) − ∂t(|u|^{p−2} u) = 0,    A(t,x,ξ,η)·η ≥ c1 ω |η|^p,  |A| ≤ c2 ω |η|^{p−1}
//! ```
//!
//! on intrinsic cylinders `Q_T = K_R(x0) × (t0 − T, t0)` whose height adapts to the
//! weight through `(∬_{Q_T} ω^α)^{1/α} T^{1/α′} = C R^{n/α+p}`.
//!
//! The crate is split the same way an experiment flows:
//!
//! - [`weights`]: exponent algebra, the weight catalog, cylinder quadrature and the
//!   Muckenhoupt / `A∞` / doubling diagnostics.
//! - [`geometry`]: cylinders, the intrinsic height solvers and the Harnack sub-cylinders.
//! - [`solver`]: implicit finite-difference time stepping with damped Newton, flux
//!   growth audits, weak residuals and the 1-D `p`-eigenpair oracle.
//! - [`estimates`]: empirical checkers for the Moser and Harnack bounds and the
//!   supporting lemmas.
//! - [`harness`]: configuration, the Harnack pipeline, weight surveys and reports.
//!
//! Spatial cross-sections are axis-aligned cubes `(x0 − R, x0 + R)^n`. Wherever a
//! formula needs `|K_R|` the normalized value `R^n` is used, so `|Q_T| = R^n T`; raw
//! Lebesgue volumes `(2R)^n T` are available through [`geometry::Cylinder::volume`].

pub mod error;
pub mod estimates;
pub mod geometry;
pub mod harness;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
