//! Independent engines for checking the analytic results: Monte Carlo
//! estimates of crossing statistics and policy costs, and backward induction
//! on a price grid.

mod grid_dp;
mod monte_carlo;

pub use grid_dp::{grid_dp_solve, GridSolution, GridSpec, Transition};
pub use monte_carlo::{
    mc_crossing_stats, mc_policy_cost, CrossingEstimate, McEstimate, Policy, MIN_MC_PATHS,
};

/// Comparisons against Monte Carlo use this many standard errors.
pub const SE_MULTIPLIER: f64 = 4.0;
