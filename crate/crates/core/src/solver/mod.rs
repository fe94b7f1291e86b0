//! Implicit finite-difference solver for `∂t(|u|^{p−2} u) = div A(t, x, u, ∇u)`.
//!
//! Backward Euler in `b(u) = |u|^{p−2} u`, conservative edge fluxes with `ω` sampled
//! at edge midpoints, and a damped Newton iteration on the nodal unknowns. Each edge
//! carries the normal component of `A` evaluated at the normal difference quotient,
//! which is exact for `n = 1` and for linear fluxes and keeps the scheme monotone.
//! The `p`-Laplacian is regularized as `(|∇u|² + ε²)^{(p−2)/2} ∇u` with
//! `ε = max(1e−8, h) · ‖u0‖∞`, so solutions scale exactly with the data.

mod eigen;
mod flux;
mod grid;
mod stepper;
mod weak;

pub use eigen::{p_eigenpair_1d, p_eigenpair_1d_with, pi_p, EigenPair};
pub use flux::{
    audit_growth, model_flux, DiagonalFlux, Flux, FluxFn, FnFlux, GrowthAudit, GrowthSample,
    ModelFlux,
};
pub use grid::{BoundaryKind, DumpHeader, DumpLabels, Field, Grid};
pub use stepper::{
    discrete_mass, edges_of, solve, step, BoundaryCondition, BoundaryData, Edge, Solution,
    SolverOptions, StepReport, Stepper,
};
pub use weak::{weak_residual, TestFn, TestFunction};
