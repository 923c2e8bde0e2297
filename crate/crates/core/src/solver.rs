//! Backward-induction bisection for the purchase thresholds.
//!
//! At each step `n`, `b(t_n)` is the price where buying now and waiting cost
//! the same: `x + H_n = V^C(x, t_n)`. The continuation value is evaluated in
//! closed form from the crossing distribution under the thresholds already
//! found for later steps, so the recursion runs from `N − 1` down to `0`.

use serde::Serialize;

use crate::crossing::{check_thresholds, crossing_distribution};
use crate::error::{Error, Result};
use crate::mvn::MvnAccuracy;
use crate::process::{HoldingSchedule, ProcessParams};

pub const DEFAULT_MAX_ITERATIONS: usize = 200;

/// Default value tolerance, `1e−6·max(1, |θ|)`.
pub fn default_eps(params: &ProcessParams) -> f64 {
    1e-6 * params.theta.abs().max(1.0)
}

/// Purchase thresholds `b(t_0), …, b(t_N)` with `b(t_N) = +∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdFunction {
    levels: Vec<f64>,
    eps: f64,
}

impl ThresholdFunction {
    pub fn new(levels: Vec<f64>, eps: f64) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidArgument(
                "a threshold function needs at least two levels".into(),
            ));
        }
        if *levels.last().unwrap() != f64::INFINITY {
            return Err(Error::InvalidArgument(
                "the last threshold must be +inf".into(),
            ));
        }
        if levels[..levels.len() - 1].iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument(
                "thresholds before the horizon must be finite".into(),
            ));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument("eps must be positive".into()));
        }
        Ok(Self { levels, eps })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> f64 {
        self.levels[n]
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn n_steps(&self) -> usize {
        self.levels.len() - 1
    }

    /// All finite levels moved by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut levels = self.levels.clone();
        let last = levels.len() - 1;
        for b in &mut levels[..last] {
            *b += delta;
        }
        Self {
            levels,
            eps: self.eps,
        }
    }

    /// Copy with `b(t_n)` replaced.
    pub fn with_level(&self, n: usize, value: f64) -> Result<Self> {
        if n >= self.n_steps() || !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cannot set level {n} to {value}"
            )));
        }
        let mut out = self.clone();
        out.levels[n] = value;
        Ok(out)
    }
}

/// Bisection bracket `[x^L, x^H]` for `b(t_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketBounds {
    pub lower: f64,
    pub upper: f64,
}

/// What happened at one step of the backward recursion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub step: usize,
    pub threshold: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    /// `x + H_n − V^C(x)` at the accepted threshold.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub thresholds: ThresholdFunction,
    /// One entry per step `0..N`, in step order.
    pub steps: Vec<StepReport>,
}

/// `V(x, t_N) = x`: at the deadline the item must be bought.
pub fn terminal_value(x: f64) -> f64 {
    x
}

/// `H_n = dt·Σ_{i=n}^{N−1} h_i`.
pub fn holding_tail(holding: &HoldingSchedule, dt: f64, n: usize) -> Result<f64> {
    if n > holding.len() {
        return Err(Error::InvalidArgument(format!(
            "step {n} is past the horizon {}",
            holding.len()
        )));
    }
    Ok(holding.tail(dt, n))
}

fn check_setup(params: &ProcessParams, holding: &HoldingSchedule) -> Result<()> {
    params.validate()?;
    holding.check_against(params)
}

/// Expected cost of waiting at `(x, t_n)` and buying at the first crossing of
/// `thresholds`: `Σ_i P_i·(E_i + H_i)`.
pub fn continuation_value(
    params: &ProcessParams,
    holding: &HoldingSchedule,
    x: f64,
    n: usize,
    thresholds: &[f64],
    acc: &MvnAccuracy,
) -> Result<f64> {
    check_setup(params, holding)?;
    if n >= params.n_steps {
        return Err(Error::InvalidArgument(
            "no continuation at the horizon".into(),
        ));
    }
    check_thresholds(params, thresholds)?;
    acc.validate()?;
    Ok(continuation_unchecked(params, holding, x, n, thresholds, acc)?.0)
}

/// Returns `(V^C, number of crossing steps)`.
fn continuation_unchecked(
    params: &ProcessParams,
    holding: &HoldingSchedule,
    x: f64,
    n: usize,
    thresholds: &[f64],
    acc: &MvnAccuracy,
) -> Result<(f64, usize)> {
    let dist = crossing_distribution(params, x, n, thresholds, acc)?;
    let mut total = 0.0;
    let mut before = 1.0;
    for (k, i) in dist.steps().enumerate() {
        let prob = before - dist.survivals[k];
        total += dist.weighted_overshoots[k] + prob * holding.tail(params.dt, i);
        before = dist.survivals[k];
    }
    Ok((total, dist.probs.len()))
}

/// `V(x, t_n) = min(x + H_n, V^C(x, t_n))`, or `x` at the horizon.
pub fn value(
    params: &ProcessParams,
    holding: &HoldingSchedule,
    x: f64,
    n: usize,
    thresholds: &[f64],
    acc: &MvnAccuracy,
) -> Result<f64> {
    check_setup(params, holding)?;
    if n == params.n_steps {
        return Ok(terminal_value(x));
    }
    let buy = x + holding.tail(params.dt, n);
    Ok(buy.min(continuation_value(params, holding, x, n, thresholds, acc)?))
}

/// `b(t_{N−1}) = θ − h_{N−1}/K`, where buying now and waiting one step tie.
pub fn last_period_threshold(params: &ProcessParams, holding: &HoldingSchedule) -> Result<f64> {
    check_setup(params, holding)?;
    Ok(params.theta - holding.rate(params.n_steps - 1) / params.kappa)
}

/// Bracket for `b(t_n)` given `b(t_{n+1})`.
///
/// The lower end is the smaller of the price whose one-step mean reaches
/// `b(t_{n+1})` and the price whose one-step drift, less one noise standard
/// deviation, no longer covers a step of holding. The upper end is
/// `min(b(t_{n+1}), θ − h_{N−1}/K)`.
pub fn threshold_bounds(
    params: &ProcessParams,
    holding: &HoldingSchedule,
    n: usize,
    b_next: f64,
) -> Result<BracketBounds> {
    check_setup(params, holding)?;
    if n >= params.n_steps {
        return Err(Error::InvalidArgument(format!(
            "step {n} has no threshold bracket"
        )));
    }
    if b_next.is_nan() || b_next == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!(
            "b(t_{{n+1}}) = {b_next} is not usable"
        )));
    }
    let (theta, kappa, dt) = (params.theta, params.kappa, params.dt);
    let drift = theta * dt * kappa;
    let reach = (b_next - drift) / (1.0 - dt * kappa);
    let noise = (drift - params.sigma * dt.sqrt() - holding.rate(n) * dt) / (dt * kappa);
    let cap = theta - holding.rate(params.n_steps - 1) / kappa;
    Ok(BracketBounds {
        lower: reach.min(noise),
        upper: b_next.min(cap),
    })
}

/// Solves `b(t_0), …, b(t_{N−1})` to value tolerance `eps`.
pub fn solve_thresholds(
    params: &ProcessParams,
    holding: &HoldingSchedule,
    eps: f64,
    acc: &MvnAccuracy,
) -> Result<ThresholdFunction> {
    Ok(solve_with_report(params, holding, eps, acc)?.thresholds)
}

/// [`solve_thresholds`] with per-step brackets, iteration counts and gaps.
pub fn solve_with_report(
    params: &ProcessParams,
    holding: &HoldingSchedule,
    eps: f64,
    acc: &MvnAccuracy,
) -> Result<SolveReport> {
    check_setup(params, holding)?;
    acc.validate()?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if acc.abs_tol > eps / 100.0 {
        return Err(Error::InvalidArgument(format!(
            "mvn abs_tol {} must not exceed eps/100 = {}",
            acc.abs_tol,
            eps / 100.0
        )));
    }
    let dk = params.dt * params.kappa;
    if !(dk > 0.0 && dk < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "the solver needs 0 < dt*K < 1, got {dk}"
        )));
    }

    let big_n = params.n_steps;
    let mut b = vec![f64::NEG_INFINITY; big_n + 1];
    b[big_n] = f64::INFINITY;
    b[big_n - 1] = last_period_threshold(params, holding)?;
    let last_bounds = threshold_bounds(params, holding, big_n - 1, f64::INFINITY)?;
    let mut steps = vec![StepReport {
        step: big_n - 1,
        threshold: b[big_n - 1],
        lower: last_bounds.lower,
        upper: last_bounds.upper,
        iterations: 0,
        gap: 0.0,
    }];

    for n in (0..big_n - 1).rev() {
        let bounds = threshold_bounds(params, holding, n, b[n + 1])?;
        let tail = holding.tail(params.dt, n);
        // Levels before n are never looked at from step n.
        let gap = |x: f64, b: &[f64]| -> Result<f64> {
            Ok(x + tail - continuation_unchecked(params, holding, x, n, b, acc)?.0)
        };
        let report = bisect(n, bounds, eps, |x| gap(x, &b))?;
        b[n] = report.threshold;
        steps.push(report);
    }
    steps.reverse();
    Ok(SolveReport {
        thresholds: ThresholdFunction::new(b, eps)?,
        steps,
    })
}

fn bisect(
    n: usize,
    bounds: BracketBounds,
    eps: f64,
    mut gap: impl FnMut(f64) -> Result<f64>,
) -> Result<StepReport> {
    let BracketBounds { lower, upper } = bounds;
    let done = |threshold: f64, iterations: usize, g: f64| StepReport {
        step: n,
        threshold,
        lower,
        upper,
        iterations,
        gap: g,
    };
    let gap_upper = gap(upper)?;
    if gap_upper.abs() <= eps {
        return Ok(done(upper, 0, gap_upper));
    }
    let gap_lower = gap(lower)?;
    if gap_lower.abs() <= eps {
        return Ok(done(lower, 0, gap_lower));
    }
    if gap_upper < 0.0 || gap_lower > 0.0 {
        return Err(Error::Bracket {
            step: n,
            lower,
            upper,
            gap_lower,
            gap_upper,
        });
    }
    let (mut lb, mut ub) = (lower, upper);
    let mut x = 0.5 * (lb + ub);
    let mut g = gap(x)?;
    let mut iterations = 1;
    while g.abs() > eps {
        if g > 0.0 {
            ub = x;
        } else {
            lb = x;
        }
        if ub - lb <= eps / 10.0 {
            break;
        }
        if iterations >= DEFAULT_MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                step: n,
                iterations,
            });
        }
        x = 0.5 * (lb + ub);
        g = gap(x)?;
        iterations += 1;
    }
    Ok(done(x, iterations, g))
}
