// Indexed loops and NaN-rejecting comparisons are the house style for the
// numeric kernels here.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::manual_is_multiple_of)]

//! Numerical laboratory for coupled thermodynamic Bethe ansatz (TBA)
//! integral equations and the associated Y-system functional equations.
//!
//! The crate evaluates the Green's-function kernels of the difference
//! operator `f(x+is) + f(x-is) - d f(x)` in closed form, solves the TBA
//! fixed-point equation by plain Banach iteration on a uniform grid, and
//! verifies the Y-system relations by continuing solutions to the strip
//! boundary.
//!
//! Modules:
//! - [`spectral`]: admissibility checks, Perron-Frobenius eigenpairs and the
//!   Dynkin/tadpole adjacency catalog;
//! - [`kernel`]: the scalar kernel `phi_d` and the matrix kernel built from
//!   an eigendecomposition of the gauge matrix;
//! - [`model`]: grids, asymptotics, the nonlinear operator and convolution;
//! - [`solver`]: fixed-point solves, contraction estimates, the constant
//!   Y-system and gauge-independence sweeps;
//! - [`analytic`]: strip evaluation, boundary values and Y-system residuals.

pub mod analytic;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
