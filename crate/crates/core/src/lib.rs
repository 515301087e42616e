//! Numerical laboratory for isolated singularities of the fractional
//! Lane-Emden equation
//!
//! ```text
//! (-Delta)^s u = |x|^theta u^p   in B_1 \ {0},    u = h outside B_1.
//! ```
//!
//! Modules, bottom-up:
//! - [`constants`]: power multipliers, Hardy exponents, regime thresholds.
//! - [`grid`] and [`fracop`]: radial functions and the fractional Laplacian
//!   of radial functions, pointwise and as a dense collocation matrix.
//! - [`solver`]: linear Dirichlet solves, the minimal-solution iteration,
//!   Newton for singular profiles, the first Dirichlet eigenpair.
//! - [`kelvin`]: the Kelvin transform and exterior problems.
//! - [`diagnostics`]: exponent fits, Harnack ratios, integral bounds.
//! - [`classical`]: the s = 1 radial ODE.
//! - [`acceptance`]: the quantitative acceptance suite shared by the CLI
//!   and the test target.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod classical;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod fracop;
pub mod grid;
pub mod kelvin;
pub mod kernel;
pub mod quad;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
