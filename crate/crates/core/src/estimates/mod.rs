//! Empirical checkers for the Moser and Harnack bounds and the supporting lemmas.
//!
//! Measures are normalized like the rest of the crate (`|K_R| = R^n`). Essential
//! extremes are plain max/min over lattice nodes, skipping the grid boundary, its
//! first interior layer and the first two time levels.

pub mod generators;
mod harnack;
mod lemmas;
mod moser;
mod sampling;
mod verdict;

pub use harnack::{
    bombieri_check, harnack_check, log_levelset_check, median_level, BombieriInput, BombieriPair,
    BombieriReport, HarnackReport, LogLevelReport, BOMBIERI_C_THETA,
};
pub use lemmas::{
    interpolation_check, iteration_check, iteration_constant, mamedov_check, steklov_average,
    steklov_errors, BoxFunction, InterpolationReport, IterationVerdict, MamedovVerdict,
    SteklovErrors,
};
pub use moser::{
    b_quantity, cutoff, levelset_profile_check, moser_check, LevelSetProfile, LevelSetReport,
    MoserReport, LEVELS,
};
pub use sampling::{
    cells, ess_inf, ess_sup, integrate, interior_nodes, log_levels, Cell, Extremum, Resolution,
};
pub use verdict::VerdictRecord;
