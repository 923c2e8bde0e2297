use rayon::prelude::*;
use serde::Serialize;

use crate::crossing::check_thresholds;
use crate::error::{Error, Result};
use crate::process::{mean_after, path_rng, step, HoldingSchedule, ProcessParams, PATH_CHUNK};
use crate::solver::ThresholdFunction;

/// Smallest path count accepted by the estimators.
pub const MIN_MC_PATHS: usize = 1_000;

/// A purchasing rule: buy at the first step whose price is at or below the
/// rule's level.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Threshold(ThresholdFunction),
    BuyNow,
    BuyAtDeadline,
    /// Constant level `c` before the horizon.
    FixedLevel(f64),
}

impl Policy {
    /// Level at step `m` of an `n_steps` horizon.
    pub fn level(&self, m: usize, n_steps: usize) -> f64 {
        if m >= n_steps {
            return f64::INFINITY;
        }
        match self {
            Policy::Threshold(b) => b.level(m),
            Policy::BuyNow => f64::INFINITY,
            Policy::BuyAtDeadline => f64::NEG_INFINITY,
            Policy::FixedLevel(c) => *c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Threshold(_) => "threshold",
            Policy::BuyNow => "buy_now",
            Policy::BuyAtDeadline => "buy_at_deadline",
            Policy::FixedLevel(_) => "fixed_level",
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// Monte Carlo crossing statistics at one step `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingEstimate {
    pub step: usize,
    /// Frequency of `τ = t_i`.
    pub probability: McEstimate,
    /// Mean of `X(t_i)` over paths crossing at `t_i`; `None` without crossings.
    pub overshoot: Option<McEstimate>,
}

/// Running sums of deviations from a reference value.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, dev: f64) {
        self.count += 1;
        self.sum += dev;
        self.sum_sq += dev * dev;
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn estimate(&self, reference: f64, seed: u64) -> Option<McEstimate> {
        if self.count == 0 {
            return None;
        }
        let c = self.count as f64;
        let mean = self.sum / c;
        let var = if self.count > 1 {
            ((self.sum_sq - c * mean * mean) / (c - 1.0)).max(0.0)
        } else {
            0.0
        };
        Some(McEstimate {
            mean: reference + mean,
            std_error: (var / c).sqrt(),
            n_paths: self.count as usize,
            seed,
        })
    }
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths < MIN_MC_PATHS {
        return Err(Error::InvalidArgument(format!(
            "n_paths must be at least {MIN_MC_PATHS}, got {n_paths}"
        )));
    }
    Ok(())
}

/// Runs `body(path_index, &mut acc)` over all paths in fixed chunks and
/// merges the chunk results in order, so the output does not depend on the
/// thread count.
fn over_paths<A, F>(n_paths: usize, init: impl Fn() -> A + Sync, body: F, merge: impl Fn(&mut A, &A)) -> A
where
    A: Send,
    F: Fn(u64, &mut A) + Sync,
{
    let chunks = n_paths.div_ceil(PATH_CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let end = ((c + 1) * PATH_CHUNK).min(n_paths);
            for p in c * PATH_CHUNK..end {
                body(p as u64, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = init();
    for part in &parts {
        merge(&mut total, part);
    }
    total
}

/// Simulated crossing frequencies and crossing-price means from `(x, t_n)`
/// for `i = n+1..=N`. A path crosses at the first `t_i` with
/// `X(t_i) ≤ b(t_i)`; `b(t_N) = +∞` so every path crosses by the horizon.
pub fn mc_crossing_stats(
    params: &ProcessParams,
    thresholds: &[f64],
    x: f64,
    n: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<CrossingEstimate>> {
    params.validate()?;
    check_thresholds(params, thresholds)?;
    check_paths(n_paths)?;
    if n >= params.n_steps {
        return Err(Error::InvalidArgument(format!(
            "start step {n} must precede the horizon {}",
            params.n_steps
        )));
    }
    let m = params.n_steps - n;
    let reference: Vec<f64> = (1..=m).map(|k| mean_after(params, x, k)).collect();
    let stats = over_paths(
        n_paths,
        || vec![Moments::default(); m],
        |p, acc| {
            let mut rng = path_rng(seed, p);
            let mut price = x;
            for k in 1..=m {
                price = step(params, price, &mut rng);
                if price <= thresholds[n + k] {
                    acc[k - 1].push(price - reference[k - 1]);
                    break;
                }
            }
        },
        |a, b| a.iter_mut().zip(b).for_each(|(a, b)| a.merge(b)),
    );

    let total = n_paths as f64;
    Ok(stats
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let p = s.count as f64 / total;
            CrossingEstimate {
                step: n + 1 + k,
                probability: McEstimate {
                    mean: p,
                    std_error: (p * (1.0 - p) / total).sqrt(),
                    n_paths,
                    seed,
                },
                overshoot: s.estimate(reference[k], seed),
            }
        })
        .collect())
}

/// Simulated expected total cost `X(purchase) + H(purchase step)` of
/// following `policy` from `(x0, t_{n0})`.
pub fn mc_policy_cost(
    params: &ProcessParams,
    holding: &HoldingSchedule,
    policy: &Policy,
    x0: f64,
    n0: usize,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    params.validate()?;
    holding.check_against(params)?;
    check_paths(n_paths)?;
    let big_n = params.n_steps;
    if n0 > big_n {
        return Err(Error::InvalidArgument(format!(
            "start step {n0} exceeds the horizon {big_n}"
        )));
    }
    if let Policy::Threshold(b) = policy {
        check_thresholds(params, b.levels())?;
    }
    let tails = holding.tails(params.dt);
    let immediate = x0 + tails[n0];
    if x0 <= policy.level(n0, big_n) {
        return Ok(McEstimate {
            mean: immediate,
            std_error: 0.0,
            n_paths,
            seed,
        });
    }
    let levels: Vec<f64> = (0..=big_n).map(|m| policy.level(m, big_n)).collect();
    let stats = over_paths(
        n_paths,
        Moments::default,
        |p, acc| {
            let mut rng = path_rng(seed, p);
            let mut price = x0;
            for m in n0 + 1..=big_n {
                price = step(params, price, &mut rng);
                if price <= levels[m] {
                    acc.push(price + tails[m] - immediate);
                    break;
                }
            }
        },
        |a, b| a.merge(b),
    );
    Ok(stats.estimate(immediate, seed).expect("every path buys by the horizon"))
}
