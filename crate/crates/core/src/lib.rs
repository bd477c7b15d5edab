// `!(x > 0)` style guards are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Sparse linear regression that stays consistent when outputs are
//! adversarially contaminated.
//!
//! The estimator solves the joint problem
//!
//! ```text
//! min over (beta, theta) of (1/2n)|y - X beta - sqrt(n) theta|_2^2
//!                           + lambda_s |beta|_1 + lambda_o |theta|_1
//! ```
//!
//! or, equivalently after eliminating `theta`, an l1-penalized Huber loss
//! whose threshold scale is carried by `lambda_o sqrt(n)`. The crate
//! provides:
//!
//! - [`huber`], [`instance`]: the loss primitives and shared domain types;
//! - [`solver`]: FISTA on the Huber form, plain Lasso, the alternating
//!   joint solver, and the stationarity check;
//! - [`tuning`]: closed-form penalty recipes, every constant of the error
//!   bound, and the feasibility condition report;
//! - [`simulate`]: seeded Gaussian designs and adversarial contaminations,
//!   plus a lossless instance directory format;
//! - [`verify`]: Monte Carlo coverage checks for the concentration
//!   inequalities, Gaussian-width estimates, the transfer-principle probe,
//!   the overflow-count bound, and a heuristic RE-constant estimator;
//! - [`bench`]: the sweep harness with CSV/SVG reporting and power-law
//!   exponent fits.

pub mod bench;
pub mod covariance;
pub mod error;
pub mod huber;
pub mod instance;
pub mod io_util;
pub mod linalg;
pub mod rng;
pub mod simulate;
pub mod solver;
pub mod tuning;
pub mod verify;

pub use covariance::Covariance;
pub use error::{Error, Result};
pub use huber::{huber_psi, huber_value, residual_scaled};
pub use instance::{FitResult, PenaltyPair, ProblemInstance, Provenance};
pub use solver::{
    kkt_check, objective_huber, prox_l1, solve_extended_lasso, solve_huber_lasso,
    solve_plain_lasso, KktReport, SolverConfig, StepRule,
};
pub use tuning::{
    condition_report, nguyen_tran_tuning, paper_tuning, rate_constants, ConditionReport,
    RateConstants, TuningBundle, TuningInputs,
};
