use serde::Serialize;

use super::config::RunConfig;
use super::table::Table;
use crate::crossing::crossing_distribution;
use crate::error::Result;
use crate::oracle::{
    grid_dp_solve, mc_crossing_stats, mc_policy_cost, GridSpec, McEstimate, Policy, SE_MULTIPLIER,
};
use crate::solver::{solve_thresholds, value};

/// Below this many paths a passing Monte Carlo check is reported as inconclusive.
pub const MIN_CONCLUSIVE_PATHS: usize = 10_000;
/// Threshold perturbation used by the dominance check.
pub const PERTURBATION: f64 = 0.25;
/// Continuation points compared against the grid oracle.
pub const VALUE_POINTS: usize = 10;
const VALUE_TOLERANCE: f64 = 1e-3;
const THRESHOLD_TOLERANCE: f64 = 1e-2;
/// Crossing-price means are compared only where the crossing is this likely.
const MIN_OVERSHOOT_PROB: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Inconclusive => "inconclusive",
        }
    }
}

/// Worst case of one family of comparisons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub delta: f64,
    /// Standard error of `delta`; zero for deterministic checks.
    pub std_error: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&VerifyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["check", "status", "delta", "std_error", "tolerance", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.name.into(),
                c.status.as_str().into(),
                c.delta.into(),
                c.std_error.into(),
                c.tolerance.into(),
                c.detail.as_str().into(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    /// Start price; defaults to `θ + 2σ`.
    pub x0: Option<f64>,
    /// Adds `delta` to `b(t_step)` of the policy under test.
    pub corrupt: Option<(usize, f64)>,
}

/// One Monte Carlo comparison: `delta` should be within 4 `se` of zero
/// (two-sided) or below `4·se` (one-sided).
struct McComparison {
    label: String,
    delta: f64,
    se: f64,
}

impl McComparison {
    fn score(&self, one_sided: bool) -> f64 {
        let d = if one_sided { self.delta } else { self.delta.abs() };
        if self.se > 0.0 {
            d / self.se
        } else if d > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

fn mc_check(
    name: &'static str,
    items: Vec<McComparison>,
    one_sided: bool,
    n_paths: usize,
) -> VerifyCheck {
    let worst = items
        .iter()
        .max_by(|a, b| a.score(one_sided).total_cmp(&b.score(one_sided)));
    let Some(worst) = worst else {
        return VerifyCheck {
            name,
            status: CheckStatus::Inconclusive,
            delta: 0.0,
            std_error: 0.0,
            tolerance: 0.0,
            detail: "nothing to compare".into(),
        };
    };
    let failed = worst.score(one_sided) > SE_MULTIPLIER;
    let status = if failed {
        CheckStatus::Fail
    } else if n_paths < MIN_CONCLUSIVE_PATHS {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Pass
    };
    VerifyCheck {
        name,
        status,
        delta: worst.delta,
        std_error: worst.se,
        tolerance: SE_MULTIPLIER * worst.se,
        detail: format!("worst of {}: {}", items.len(), worst.label),
    }
}

fn combined(a: &McEstimate, b: &McEstimate) -> f64 {
    a.std_error.hypot(b.std_error)
}

/// Cross-checks the analytic engine against Monte Carlo and the grid oracle.
///
/// With `corrupt` set, the policy under test is the solved thresholds with
/// one level moved; the analytic references still use the solved ones.
pub fn cmd_verify(cfg: &RunConfig, opts: &VerifyOptions) -> Result<VerifyReport> {
    let p = &cfg.params;
    let h = &cfg.holding;
    let x0 = opts.x0.unwrap_or(p.theta + 2.0 * p.sigma);
    let n_paths = cfg.n_paths;
    let seed = cfg.sim_seed;

    let optimal = solve_thresholds(p, h, cfg.eps, &cfg.mvn)?;
    let policy_b = match opts.corrupt {
        Some((step, delta)) => optimal.with_level(step, optimal.level(step) + delta)?,
        None => optimal.clone(),
    };
    let mut checks = Vec::new();

    // Crossing statistics of the policy under test, both ways.
    let dist = crossing_distribution(p, x0, 0, policy_b.levels(), &cfg.mvn)?;
    let mc = mc_crossing_stats(p, policy_b.levels(), x0, 0, n_paths, seed)?;
    let total = n_paths as f64;
    let probs = mc
        .iter()
        .zip(&dist.probs)
        .map(|(est, &pr)| McComparison {
            label: format!("i = {}", est.step),
            delta: est.probability.mean - pr,
            se: (pr * (1.0 - pr) / total).sqrt().max(1.0 / total),
        })
        .collect();
    checks.push(mc_check("crossing_probabilities", probs, false, n_paths));
    let overshoots = mc
        .iter()
        .zip(dist.probs.iter().zip(&dist.overshoots))
        .filter_map(|(est, (&pr, e))| {
            let o = est.overshoot?;
            let e = (*e)?;
            (pr >= MIN_OVERSHOOT_PROB && o.n_paths >= 2).then(|| McComparison {
                label: format!("i = {}", est.step),
                delta: o.mean - e,
                se: o.std_error,
            })
        })
        .collect();
    checks.push(mc_check("overshoot_expectations", overshoots, false, n_paths));

    // Policy cost against the optimal value.
    let policy = Policy::Threshold(policy_b.clone());
    let cost = mc_policy_cost(p, h, &policy, x0, 0, n_paths, seed)?;
    let v = value(p, h, x0, 0, optimal.levels(), &cfg.mvn)?;
    checks.push(mc_check(
        "policy_value",
        vec![McComparison {
            label: format!("x0 = {x0}, value = {v}"),
            delta: cost.mean - v,
            se: cost.std_error,
        }],
        false,
        n_paths,
    ));

    let mut alternatives = vec![
        ("buy_now".to_string(), Policy::BuyNow),
        ("buy_at_deadline".to_string(), Policy::BuyAtDeadline),
        (
            format!("b + {PERTURBATION}"),
            Policy::Threshold(optimal.shifted(PERTURBATION)),
        ),
        (
            format!("b - {PERTURBATION}"),
            Policy::Threshold(optimal.shifted(-PERTURBATION)),
        ),
    ];
    if opts.corrupt.is_some() {
        alternatives.push(("solved b".to_string(), Policy::Threshold(optimal.clone())));
    }
    let mut dominance = Vec::new();
    for (label, alt) in &alternatives {
        let other = mc_policy_cost(p, h, alt, x0, 0, n_paths, seed)?;
        dominance.push(McComparison {
            label: format!("vs {label}"),
            delta: cost.mean - other.mean,
            se: combined(&cost, &other),
        });
    }
    checks.push(mc_check("policy_dominance", dominance, true, n_paths));

    // Grid backward induction, independent of the crossing decomposition.
    let spec = GridSpec::default_for(p);
    let grid = grid_dp_solve(p, h, &spec)?;
    let tol = spec.step().max(THRESHOLD_TOLERANCE);
    let (worst_n, worst_b) = (0..p.n_steps)
        .map(|n| (n, grid.thresholds[n] - optimal.level(n)))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("at least one step");
    checks.push(VerifyCheck {
        name: "grid_dp_thresholds",
        status: if worst_b.abs() <= tol {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        delta: worst_b,
        std_error: 0.0,
        tolerance: tol,
        detail: format!("worst at n = {worst_n}"),
    });

    let mut worst_v = (0.0f64, 0.0f64);
    for k in 1..=VALUE_POINTS {
        let x = optimal.level(0) + 0.25 * k as f64 * p.sigma;
        let d = grid.value_at(0, x) - value(p, h, x, 0, optimal.levels(), &cfg.mvn)?;
        if d.abs() > worst_v.1.abs() {
            worst_v = (x, d);
        }
    }
    checks.push(VerifyCheck {
        name: "grid_dp_values",
        status: if worst_v.1.abs() <= VALUE_TOLERANCE {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        delta: worst_v.1,
        std_error: 0.0,
        tolerance: VALUE_TOLERANCE,
        detail: format!("worst at x = {}", worst_v.0),
    });

    Ok(VerifyReport { checks })
}
