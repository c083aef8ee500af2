//! Adaptive-LASSO estimation and variable selection for discretely observed
//! scalar diffusions.
//!
//! The pipeline has three stages:
//!
//! 1. [`qmle::fit`] minimizes the Euler quasi-likelihood contrast
//!    ([`contrast`]) to get an unpenalized estimate and its Hessian.
//! 2. [`alasso::select`] builds adaptive penalty weights from that estimate
//!    and solves the penalized quadratic program by coordinate descent,
//!    producing exact zeros for deselected parameters.
//! 3. [`montecarlo::run_mc`] repeats simulate → fit → select over seeded
//!    replications ([`simulate`]) and summarizes the estimates.
//!
//! [`io`] holds the CSV/JSON formats used by the `sde-lasso` binary.

pub mod alasso;
pub mod contrast;
pub mod error;
pub mod io;
pub mod models;
pub mod montecarlo;
pub mod qmle;
pub mod simulate;

pub use alasso::{make_weights, select, solve_penalized, Penalty, PenaltyWeights, SelectionResult};
pub use contrast::{quasi_grad, quasi_hess, quasi_loglik, ContrastEval, RateMatrix};
pub use error::{Error, Result};
pub use models::{builtin, ckls_reduce, DiffusionModel, ParamVector};
pub use montecarlo::{run_mc, McConfig, McSummary};
pub use qmle::{default_init, fit, FitOptions, FitResult};
pub use simulate::{simulate, Scheme, SimConfig, Trajectory};
