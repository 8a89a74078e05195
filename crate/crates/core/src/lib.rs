//! Primal-dual averaging methods for regularized convex smooth composite
//! problems `min f(x) + h(x) + alpha * w(x)`, with per-iteration computable
//! accuracy certificates built from aggregated cutting-plane models.
//!
//! The crate is organised bottom-up:
//!
//! - [`oracle`]: the oracle traits a problem instance implements, and the
//!   primal/dual objective evaluators.
//! - [`acp`]: the aggregated cutting-plane model and certificate gaps.
//! - [`algorithms`]: pure step functions for the one-, two- and three-average
//!   methods and the gradient extrapolation method.
//! - [`instances`]: the entropic matrix game, the smoothed Fisher market and a
//!   quadratic box toy, plus a grid-search reference minimizer.
//! - [`harness`]: run drivers, correspondence/rate/soundness suites and
//!   serializable reports.

pub mod acp;
pub mod algorithms;
pub mod error;
pub mod harness;
pub mod instances;
pub mod numerics;
pub mod oracle;

pub use error::{Error, Result};
pub use oracle::{Extended, ProblemOracles};
