//! Real-time projected-gradient nonlinear model predictive control.
//!
//! The crate is organised in layers:
//!
//! - [`model`]: discrete-time optimal control problems (dynamics, stage and
//!   terminal cost, input boxes), trajectory rollout, running cost and exact
//!   adjoint gradients.
//! - [`solver`]: the real-time iteration itself. Each sampling instant
//!   warm-starts from the shifted previous plan and applies projected gradient
//!   steps, either a fixed number of them or until the stability stopping
//!   criterion fires.
//! - [`pkpd`]: the propofol/remifentanil patient model (four-compartment PK per
//!   drug, exact zero-order-hold discretization, interaction Hill surface for
//!   BIS).
//! - [`sim`]: closed-loop scenarios against the patient, disturbance and model
//!   mismatch injection, state estimation and clinical performance metrics.
//! - [`suite`]: the acceptance battery, shared by the test suite and the CLI.
//! - [`cli`]: file loading, overrides and the `run`, `compare-iterations` and
//!   `suite` commands behind the `pgnmpc` binary.
//!
//! Runnable walkthroughs for every capability live in the crate's
//! `examples/` directory (`cargo run -p pgnmpc --example <name>`).

// NaN must fail range checks, so `!(x > 0.0)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod model;
pub mod pkpd;
pub mod reference;
pub mod sim;
pub mod solver;
pub mod suite;

pub use error::{Error, Result};
