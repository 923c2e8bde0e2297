use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mvn::{std_normal_cdf, std_normal_pdf};
use crate::process::{HoldingSchedule, ProcessParams};
use crate::quadrature::gauss_hermite_normal;

/// How the one-step expectation `E[V(X(t_{n+1})) | X(t_n) = x]` is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Transition {
    /// Closed-form Gaussian expectation of the piecewise-linear interpolant,
    /// exact across the kink of `V` at the threshold.
    ExactLinear,
    /// Gauss-Hermite quadrature with this many nodes.
    GaussHermite(usize),
}

/// Price grid and transition rule for [`grid_dp_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub transition: Transition,
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 2048;
    const DEFAULT_SPAN: f64 = 8.0;
    const MIN_SPAN: f64 = 6.0;

    /// `θ ± 8` stationary standard deviations, 2048 nodes, exact transitions.
    pub fn default_for(params: &ProcessParams) -> Self {
        let half = Self::DEFAULT_SPAN * params.stationary_variance().sqrt();
        Self {
            x_min: params.theta - half,
            x_max: params.theta + half,
            n_points: Self::DEFAULT_POINTS,
            transition: Transition::ExactLinear,
        }
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn validate(&self, params: &ProcessParams) -> Result<()> {
        if !(self.x_min < self.x_max) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid needs finite x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.n_points < 64 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 64 points, got {}",
                self.n_points
            )));
        }
        if self.transition == Transition::GaussHermite(0) {
            return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
        }
        let half = Self::MIN_SPAN * params.stationary_variance().sqrt();
        if self.x_min > params.theta - half || self.x_max < params.theta + half {
            return Err(Error::InvalidArgument(format!(
                "grid [{}, {}] must cover theta +/- {} stationary standard deviations",
                self.x_min,
                self.x_max,
                Self::MIN_SPAN
            )));
        }
        Ok(())
    }

    fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n_points)
            .map(|j| self.x_min + j as f64 * h)
            .collect()
    }
}

/// Value tables and thresholds from backward induction on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSolution {
    pub spec: GridSpec,
    pub nodes: Vec<f64>,
    /// `V(x_j, t_n)` for `n = 0..=N`.
    pub values: Vec<Vec<f64>>,
    /// `V^C(x_j, t_n)` for `n = 0..N`.
    pub continuation: Vec<Vec<f64>>,
    /// `b(t_n)` for `n = 0..=N`, with `+∞` at the horizon.
    pub thresholds: Vec<f64>,
    /// Asymptotic slope of `V(·, t_n)` above the grid.
    slopes: Vec<f64>,
}

impl GridSolution {
    /// Interpolated `V(x, t_n)`.
    pub fn value_at(&self, n: usize, x: f64) -> f64 {
        interpolate(&self.spec, &self.values[n], self.slopes[n], x)
    }

    /// Interpolated `V^C(x, t_n)`, `n < N`; above the grid `V^C` shares the
    /// asymptotic slope of `V`.
    pub fn continuation_at(&self, n: usize, x: f64) -> f64 {
        interpolate(&self.spec, &self.continuation[n], self.slopes[n], x)
    }
}

fn interpolate(spec: &GridSpec, v: &[f64], upper_slope: f64, x: f64) -> f64 {
    let last = v.len() - 1;
    if x <= spec.x_min {
        let lower_slope = (v[1] - v[0]) / spec.step();
        return v[0] + lower_slope * (x - spec.x_min);
    }
    if x >= spec.x_max {
        return v[last] + upper_slope * (x - spec.x_max);
    }
    let u = (x - spec.x_min) / spec.step();
    let j = (u.floor() as usize).min(last - 1);
    let w = u - j as f64;
    v[j] * (1.0 - w) + v[j + 1] * w
}

/// Backward induction `V(x, t_n) = min(x + H_n, E[V(X(t_{n+1}), t_{n+1}) | x])`
/// on a uniform price grid, with linear interpolation between nodes.
///
/// Below the grid `V` continues with slope one (the stopping region); above
/// it with the slope `a^(N−n)` of the far continuation region.
pub fn grid_dp_solve(
    params: &ProcessParams,
    holding: &HoldingSchedule,
    spec: &GridSpec,
) -> Result<GridSolution> {
    params.validate()?;
    holding.check_against(params)?;
    spec.validate(params)?;
    let big_n = params.n_steps;
    let a = params.persistence();
    let sd = params.sigma * params.dt.sqrt();
    let rule = match spec.transition {
        Transition::GaussHermite(points) => Some(gauss_hermite_normal(points)),
        Transition::ExactLinear => None,
    };
    let nodes = spec.nodes();
    let tails = holding.tails(params.dt);
    let slopes: Vec<f64> = (0..=big_n).map(|n| a.powi((big_n - n) as i32)).collect();

    let mut values = vec![Vec::new(); big_n + 1];
    let mut continuation = vec![Vec::new(); big_n];
    let mut thresholds = vec![f64::INFINITY; big_n + 1];
    values[big_n] = nodes.clone();

    for n in (0..big_n).rev() {
        let next = &values[n + 1];
        let slope = slopes[n + 1];
        let vc: Vec<f64> = nodes
            .par_iter()
            .map(|&x| {
                let mean = params.theta + (x - params.theta) * a;
                match &rule {
                    Some((z, w)) => z
                        .iter()
                        .zip(w)
                        .map(|(&zq, &wq)| wq * interpolate(spec, next, slope, mean + sd * zq))
                        .sum(),
                    None => exact_expectation(spec, next, slope, mean, sd),
                }
            })
            .collect();
        let buy: Vec<f64> = nodes.iter().map(|x| x + tails[n]).collect();
        thresholds[n] = sign_change(&nodes, &buy, &vc).ok_or_else(|| {
            Error::Oracle(format!(
                "the grid [{}, {}] does not bracket the threshold at step {n}; widen the grid",
                spec.x_min, spec.x_max
            ))
        })?;
        values[n] = buy.iter().zip(&vc).map(|(b, c)| b.min(*c)).collect();
        continuation[n] = vc;
    }
    Ok(GridSolution {
        spec: *spec,
        nodes,
        values,
        continuation,
        thresholds,
        slopes,
    })
}

/// `E[V(Y)]` for `Y ~ N(mean, sd²)` and `V` the interpolant of `v`, written
/// as a line plus hinge functions at the nodes:
/// `V(y) = v_0 + (y − x_0) + Σ_j Δm_j·(y − x_j)⁺`, with slope one below the
/// grid and `upper_slope` above it.
fn exact_expectation(spec: &GridSpec, v: &[f64], upper_slope: f64, mean: f64, sd: f64) -> f64 {
    // beyond this many sd a hinge is either linear or zero to double precision
    const CUTOFF: f64 = 12.0;
    let step = spec.step();
    let last = v.len() - 1;
    let mut total = v[0] + (mean - spec.x_min);
    // Continuation below the grid has slope one, as does the stopping region.
    let mut slope_below = 1.0;
    for j in 0..=last {
        let slope = if j < last {
            (v[j + 1] - v[j]) / step
        } else {
            upper_slope
        };
        let jump = slope - slope_below;
        slope_below = slope;
        if jump == 0.0 {
            continue;
        }
        let k = spec.x_min + j as f64 * step;
        let d = (mean - k) / sd;
        let hinge = if d > CUTOFF {
            mean - k
        } else if d < -CUTOFF {
            0.0
        } else {
            (mean - k) * std_normal_cdf(d) + sd * std_normal_pdf(d)
        };
        total += jump * hinge;
    }
    total
}

/// Abscissa where `buy − vc` turns positive, by linear interpolation.
fn sign_change(nodes: &[f64], buy: &[f64], vc: &[f64]) -> Option<f64> {
    let gap = |j: usize| buy[j] - vc[j];
    if gap(0) > 0.0 {
        return None;
    }
    let j = (0..nodes.len() - 1).find(|&j| gap(j + 1) > 0.0)?;
    let (g0, g1) = (gap(j), gap(j + 1));
    Some(nodes[j] + (nodes[j + 1] - nodes[j]) * (-g0) / (g1 - g0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> (ProcessParams, HoldingSchedule) {
        let p = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 10).unwrap();
        let h = HoldingSchedule::linear_in_remaining(0.01, &p).unwrap();
        (p, h)
    }

    #[test]
    fn last_step_is_exact() {
        let (p, h) = fig2();
        let spec = GridSpec::default_for(&p);
        let sol = grid_dp_solve(&p, &h, &spec).unwrap();
        for (j, &x) in sol.nodes.iter().enumerate() {
            let want = 10.0 + (x - 10.0) * 0.5;
            assert!((sol.continuation[9][j] - want).abs() < 1e-8);
        }
        assert!((sol.thresholds[9] - 9.98).abs() <= spec.step());
        assert_eq!(sol.thresholds[10], f64::INFINITY);
    }

    #[test]
    fn rejects_narrow_grids() {
        let (p, h) = fig2();
        let mut spec = GridSpec::default_for(&p);
        spec.n_points = 32;
        assert!(grid_dp_solve(&p, &h, &spec).is_err());
        let mut spec = GridSpec::default_for(&p);
        spec.x_max = 11.0;
        assert!(grid_dp_solve(&p, &h, &spec).is_err());
    }
}
