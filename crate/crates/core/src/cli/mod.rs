//! Commands behind the `purchase-threshold` binary. Each returns a [`Table`]
//! so callers can write it as CSV or JSON, or inspect it directly.

pub mod config;
pub mod table;
mod verify;

use std::str::FromStr;

pub use config::{parse_config, OutputFormat, RawConfig, RunConfig};
pub use table::{Cell, Table};
pub use verify::{cmd_verify, CheckStatus, VerifyCheck, VerifyOptions, VerifyReport};

use crate::crossing::crossing_distribution;
use crate::error::{Error, Result};
use crate::oracle::mc_crossing_stats;
use crate::process::{simulate_paths, HoldingSchedule, ProcessParams};
use crate::solver::{continuation_value, solve_thresholds, solve_with_report, threshold_bounds};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Io(_) => EXIT_VALIDATION,
        Error::NumericDomain(_)
        | Error::SingularConditioning { .. }
        | Error::DegenerateConditioning { .. }
        | Error::Bracket { .. }
        | Error::NoConvergence { .. }
        | Error::Oracle(_) => EXIT_SOLVER,
    }
}

/// Threshold table: one row per step with the bisection bracket and effort.
pub fn cmd_solve(cfg: &RunConfig) -> Result<Table> {
    let report = solve_with_report(&cfg.params, &cfg.holding, cfg.eps, &cfg.mvn)?;
    let mut table = Table::new(&["n", "t", "b", "x_lower", "x_upper", "iterations", "gap"]);
    for s in &report.steps {
        table.push(vec![
            s.step.into(),
            cfg.params.time(s.step).into(),
            s.threshold.into(),
            s.lower.into(),
            s.upper.into(),
            s.iterations.into(),
            s.gap.into(),
        ]);
    }
    let big_n = cfg.params.n_steps;
    table.push(vec![
        big_n.into(),
        cfg.params.time(big_n).into(),
        f64::INFINITY.into(),
        Cell::Empty,
        Cell::Empty,
        0usize.into(),
        Cell::Empty,
    ]);
    Ok(table)
}

/// Parameter varied by [`cmd_curves`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Sets `θ`.
    Theta,
    /// Sets `σ` with `θ = 0`; holding scales with `σ`.
    Sigma,
    /// Multiplies `dt` by `C` and divides `K` by `C` with `θ = 0`; holding
    /// scales with `1/√C`.
    DtKScale,
    /// Multiplies the holding schedule.
    HoldingScale,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Theta => "theta",
            SweepParam::Sigma => "sigma",
            SweepParam::DtKScale => "dt_K_scale",
            SweepParam::HoldingScale => "holding_scale",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(Self::Theta),
            "sigma" => Ok(Self::Sigma),
            "dt_K_scale" => Ok(Self::DtKScale),
            "holding_scale" => Ok(Self::HoldingScale),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep parameter {other:?}; expected theta, sigma, dt_K_scale or holding_scale"
            ))),
        }
    }
}

/// Process and holding schedule for one sweep value.
pub fn sweep_instance(
    cfg: &RunConfig,
    param: SweepParam,
    value: f64,
) -> Result<(ProcessParams, HoldingSchedule)> {
    let base = cfg.params;
    let (params, holding) = match param {
        SweepParam::Theta => (ProcessParams { theta: value, ..base }, cfg.holding.clone()),
        SweepParam::Sigma => (
            ProcessParams {
                theta: 0.0,
                sigma: value,
                ..base
            },
            cfg.holding.scaled(value / base.sigma)?,
        ),
        SweepParam::DtKScale => (
            ProcessParams {
                theta: 0.0,
                dt: base.dt * value,
                kappa: base.kappa / value,
                ..base
            },
            cfg.holding.scaled(1.0 / value.sqrt())?,
        ),
        SweepParam::HoldingScale => (base, cfg.holding.scaled(value)?),
    };
    params.validate()?;
    Ok((params, holding))
}

/// Long-format threshold curves, re-solved from scratch for each value.
///
/// `b_shifted` moves each curve to the configured `θ`, which lines up a
/// `theta` sweep on a single curve.
pub fn cmd_curves(cfg: &RunConfig, param: SweepParam, values: &[f64]) -> Result<Table> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let mut table = Table::new(&[
        "parameter", "value", "n", "t", "theta", "sigma", "dt", "kappa", "b", "b_shifted",
    ]);
    for &v in values {
        if !v.is_finite() || (param != SweepParam::Theta && v <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sweep value {v} is out of range for {}",
                param.name()
            )));
        }
        let (params, holding) = sweep_instance(cfg, param, v)?;
        let b = solve_thresholds(&params, &holding, cfg.eps, &cfg.mvn)?;
        for (n, &level) in b.levels().iter().enumerate() {
            table.push(vec![
                param.name().into(),
                v.into(),
                n.into(),
                params.time(n).into(),
                params.theta.into(),
                params.sigma.into(),
                params.dt.into(),
                params.kappa.into(),
                level.into(),
                (level - params.theta + cfg.params.theta).into(),
            ]);
        }
    }
    Ok(table)
}

pub const DEFAULT_VALUE_POINTS: usize = 50;

/// Price grid for [`cmd_value`]. Without a span the grid covers
/// `[x^L − σ, x^H + 3σ]` around the bisection bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub span: Option<(f64, f64)>,
    pub points: usize,
}

impl Default for ValueRange {
    fn default() -> Self {
        Self {
            span: None,
            points: DEFAULT_VALUE_POINTS,
        }
    }
}

/// `V^C(x, t_n)` against `x + H_n` over a price grid.
pub fn cmd_value(cfg: &RunConfig, n: usize, range: &ValueRange) -> Result<Table> {
    let p = &cfg.params;
    if n >= p.n_steps {
        return Err(Error::InvalidArgument(format!(
            "value curve needs n < N = {}, got {n}",
            p.n_steps
        )));
    }
    let b = solve_thresholds(p, &cfg.holding, cfg.eps, &cfg.mvn)?;
    let bounds = threshold_bounds(p, &cfg.holding, n, b.level(n + 1))?;
    let (x_min, x_max) = range
        .span
        .unwrap_or((bounds.lower - p.sigma, bounds.upper + 3.0 * p.sigma));
    if range.points < 2 || !(x_min < x_max) {
        return Err(Error::InvalidArgument(
            "value range needs x_min < x_max and at least two points".into(),
        ));
    }
    let tail = cfg.holding.tail(p.dt, n);
    let mut table = Table::new(&[
        "x",
        "continuation",
        "buy_now",
        "in_stopping_region",
        "threshold",
        "x_lower",
        "x_upper",
    ]);
    let step = (x_max - x_min) / (range.points - 1) as f64;
    for j in 0..range.points {
        let x = x_min + j as f64 * step;
        let vc = continuation_value(p, &cfg.holding, x, n, b.levels(), &cfg.mvn)?;
        table.push(vec![
            x.into(),
            vc.into(),
            (x + tail).into(),
            (x <= b.level(n)).into(),
            b.level(n).into(),
            bounds.lower.into(),
            bounds.upper.into(),
        ]);
    }
    Ok(table)
}

/// Simulated paths in long format, or with `crossing` set, simulated
/// crossing statistics under the solved thresholds next to the analytic ones.
pub fn cmd_simulate(cfg: &RunConfig, x0: Option<f64>, n0: usize, crossing: bool) -> Result<Table> {
    let p = &cfg.params;
    let x0 = x0.unwrap_or(p.theta);
    if !crossing {
        let paths = simulate_paths(p, x0, n0, cfg.n_paths, cfg.sim_seed)?;
        let mut table = Table::new(&["path", "n", "t", "x"]);
        for i in 0..paths.n_paths() {
            for (c, &x) in paths.path(i).iter().enumerate() {
                table.push(vec![i.into(), (n0 + c).into(), p.time(n0 + c).into(), x.into()]);
            }
        }
        return Ok(table);
    }
    let b = solve_thresholds(p, &cfg.holding, cfg.eps, &cfg.mvn)?;
    let dist = crossing_distribution(p, x0, n0, b.levels(), &cfg.mvn)?;
    let mc = mc_crossing_stats(p, b.levels(), x0, n0, cfg.n_paths, cfg.sim_seed)?;
    let mut table = Table::new(&[
        "i",
        "t",
        "prob_mc",
        "prob_se",
        "prob",
        "overshoot_mc",
        "overshoot_se",
        "overshoot",
    ]);
    for (k, est) in mc.iter().enumerate() {
        table.push(vec![
            est.step.into(),
            p.time(est.step).into(),
            est.probability.mean.into(),
            est.probability.std_error.into(),
            dist.probs[k].into(),
            est.overshoot.map(|o| o.mean).into(),
            est.overshoot.map(|o| o.std_error).into(),
            dist.overshoots[k].into(),
        ]);
    }
    Ok(table)
}
