//! Optimal purchase timing for an item whose price follows a discretized
//! mean-reverting (AR(1)) process, when holding the item until a deadline
//! costs money.
//!
//! The optimal policy buys at the first step where the price is at or below
//! a time-dependent threshold `b(t_n)`. [`solver::solve_thresholds`] finds the
//! thresholds by backward induction, evaluating the value of waiting in
//! closed form from crossing-time probabilities ([`crossing`]) built on
//! multivariate normal orthant probabilities ([`mvn`]). The [`oracle`] module
//! re-derives the same quantities by Monte Carlo and by grid dynamic
//! programming.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod crossing;
pub mod error;
pub mod mvn;
pub mod oracle;
pub mod process;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use mvn::MvnAccuracy;
pub use process::{HoldingSchedule, ProcessParams};
pub use solver::{solve_thresholds, ThresholdFunction};
