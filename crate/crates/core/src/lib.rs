//! Dislocation-density evolution with a recrystallization delay.
//!
//! The model is the delay differential equation
//! `ρ'(t) = A₁ε̇ − A₂ε̇^(1−a₉)·ρ − A₃·ρ^a₈·ρ(t − t_cr)`, where the delayed
//! term switches on once `ρ` first reaches the critical density `ρ_cr`.
//!
//! - [`coefficients`]: physical coefficient formulas and process tracks.
//! - [`model`]: the right-hand side and constant-coefficient parameters.
//! - [`integrators`]: method-of-steps explicit Euler, backward Euler and RK4,
//!   plus critical-time detection.
//! - [`analytic`]: semi-analytic interval-by-interval reference solutions.
//! - [`harness`]: worst-case errors, convergence orders and stability scans.
//! - [`scenarios`]: material presets and runs along process tracks.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod coefficients;
pub mod error;
pub mod harness;
pub mod integrators;
pub mod model;
pub mod quadrature;
pub mod scenarios;

pub use error::{Error, Result};
pub use integrators::{Method, SolutionPath, SolverOptions};
pub use model::ConstantModel;
