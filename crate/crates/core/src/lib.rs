//! Numerical toolkit for the quadratic Hessian equation `sigma_2(D^2 u) = f`.
//!
//! * [`hessian`]: `sigma_k`, its gradient, spectra and Garding-cone tests.
//! * [`barrier`]: the explicit comparison functions with exact Hessians.
//! * [`solver`]: a finite-difference Dirichlet solver and the boundary
//!   smoothing pipeline.
//! * [`harness`]: numerical audits of strict 2-convexity, contradiction
//!   certificates, the Pogorelov functional and the interior C^2 experiment.
//! * [`cli`]: the batch front-end behind the `hessianlab` binary.

pub mod barrier;
pub mod cli;
pub mod error;
pub mod grid;
pub mod harness;
pub mod hessian;
pub mod linsolve;
pub mod solver;

pub use error::{Error, Result};
