//! Stochastic first-order methods for nonconvex expected-value objectives
//! whose sample complexity depends on the dimension only through `log d`.
//!
//! The building blocks are:
//!
//! * [`problem`]: the stochastic-problem abstraction and a synthetic
//!   nonconvex quadratic instance with closed-form value and gradient.
//! * [`prox`]: closed-form proximal maps for `(ρ̂/2)‖z‖₁²` and the ℓ1-ball
//!   indicator, box projection, and subgradient membership checks.
//! * [`admm`]: the inexact proximal-projection subsolver over a box, which
//!   returns a checkable certificate.
//! * [`estimator`]: minibatch and checkpointed variance-reduced gradient
//!   estimators with exact sample accounting.
//! * [`solvers`]: the main method and its parameter presets, projected SGD,
//!   projected SVRG, stochastic mirror descent, and a backtracking projected
//!   gradient reference solver.
//! * [`metrics`]: the ∞-norm stationarity residual over a box and the
//!   relative function gap.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod error;
pub mod estimator;
pub mod metrics;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod solvers;

pub use error::{DisfomError, Result};
