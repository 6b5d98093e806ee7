//! Spiked hard-edge eigenvalue laws of β-ensemble sample covariance matrices,
//! computed four ways: finite-n matrix Monte Carlo, Riccati diffusion Monte
//! Carlo, random operator discretization and β=2 Fredholm determinants.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod error;
pub mod field;
pub mod fredholm;
pub mod io;
pub mod limit_operators;
pub mod linalg;
pub mod matrix_models;
pub mod mc;
pub mod pde;
pub mod riccati;
pub mod stats;
pub mod stochastic;
pub mod validate;

pub use error::{Error, Result};
