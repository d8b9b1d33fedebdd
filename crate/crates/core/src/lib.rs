//! Equilibrium measures of logarithmic energy in external fields on the real
//! line, and numerical checks of the Hilbert-transform identities their
//! densities satisfy.
//!
//! The pipeline: a [`Field`] and a truncated [`Grid`] go into
//! [`solve_equilibrium`], which minimizes the discretized weighted energy and
//! returns the measure, its support, the constant `F` and the variational
//! residuals. [`diagnostics`] then checks `∫ f f̃ = 0` and `V′ = f̃` for the
//! square-root density `f`, and sweeps the truncation width.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod hilbert;
pub mod kernel;
pub mod potential;
pub mod solver;

pub use diagnostics::{
    gradient_identity_residual, l2_mass, orthogonality_defect, sqrt_density, truncation_sweep,
    SweepReport, SweepRow, Verdict,
};
pub use error::{Error, Result};
pub use fields::{
    admissibility_check, field_catalog, sign_profile, Admissibility, Field, FieldKind, SignProfile,
};
pub use grid::{make_grid, DiscreteMeasure, Grid, Samples, INTERIOR_FRACTION};
pub use hilbert::{
    check_decay, hilbert_cauchy, hilbert_indicator, hilbert_pv, hilbert_with, pairing_defect,
    tricomi_defect, Method, TricomiDefect,
};
pub use kernel::LogKernel;
pub use potential::{
    estimate_constant, log_integral_diff, log_potential, potential_on_grid, variational_residuals,
    LogIntegralSides, ResidualReport,
};
pub use solver::{
    assemble_energy, extract_support, minimize, minimize_from, project_simplex, solve_equilibrium,
    uniqueness_probe, EnergyModel, EquilibriumResult, Interval, MinimizeOutcome, ResultFile,
    SolverOptions, StepPolicy,
};
