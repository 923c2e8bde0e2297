//! The discretized mean-reverting price process.
//!
//! ```text
//! X(t) = θ·K·dt + (1 − K·dt)·X(t − dt) + σ·ε(t),   ε(t) ~ N(0, dt)
//! ```
//!
//! Conditioned on `X(t_n) = x`, the price at a later step `t_i` is Gaussian
//! with mean `θ + (x − θ)·a^(i−n)` and variance
//! `dt·σ²·(1 − a^(2(i−n))) / (1 − a²)`, where `a = 1 − dt·K` is the one-step
//! persistence. The standardized prices `Z(t_l)` for `l = n+1..i` form a
//! Gauss-Markov chain whose correlations depend only on `a`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the AR(1) price process on a finite grid of `n_steps` periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    /// Long-run mean price θ.
    pub theta: f64,
    /// Reversion rate K.
    pub kappa: f64,
    /// Volatility σ.
    pub sigma: f64,
    /// Step length.
    pub dt: f64,
    /// Number of periods N = T/dt.
    pub n_steps: usize,
}

impl ProcessParams {
    pub fn new(theta: f64, kappa: f64, sigma: f64, dt: f64, n_steps: usize) -> Result<Self> {
        let p = Self {
            theta,
            kappa,
            sigma,
            dt,
            n_steps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.theta, self.kappa, self.sigma, self.dt]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument(
                "process parameters must be finite".into(),
            ));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
        }
        if self.persistence().abs() >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "stationarity constraint |1 - dt*kappa| < 1 violated: |1 - {}*{}| = {}",
                self.dt,
                self.kappa,
                self.persistence().abs()
            )));
        }
        Ok(())
    }

    /// One-step persistence `a = 1 − dt·K`.
    #[inline]
    pub fn persistence(&self) -> f64 {
        1.0 - self.dt * self.kappa
    }

    /// Horizon T = N·dt.
    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    /// Time of step `n`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Variance of the stationary distribution, `dt·σ² / (1 − a²)`.
    pub fn stationary_variance(&self) -> f64 {
        let a = self.persistence();
        self.dt * self.sigma * self.sigma / (1.0 - a * a)
    }

    fn check_order(&self, n: usize, i: usize) -> Result<()> {
        if n >= i {
            return Err(Error::InvalidArgument(format!(
                "step indices must satisfy n < i, got n = {n}, i = {i}"
            )));
        }
        if i > self.n_steps {
            return Err(Error::InvalidArgument(format!(
                "step index {i} exceeds horizon N = {}",
                self.n_steps
            )));
        }
        Ok(())
    }
}

/// Per-period holding cost rates `h(t_0), …, h(t_{N−1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldingSchedule {
    rates: Vec<f64>,
}

impl HoldingSchedule {
    /// Rates must be finite, nonnegative and weakly decreasing in time.
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidArgument(
                "holding schedule must have at least one entry".into(),
            ));
        }
        for (i, &h) in rates.iter().enumerate() {
            if !h.is_finite() || h < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "holding rate h[{i}] = {h} must be finite and nonnegative"
                )));
            }
        }
        for (i, w) in rates.windows(2).enumerate() {
            if w[1] > w[0] {
                return Err(Error::InvalidArgument(format!(
                    "holding schedule must be weakly decreasing: h[{}] = {} < h[{}] = {}",
                    i,
                    w[0],
                    i + 1,
                    w[1]
                )));
            }
        }
        Ok(Self { rates })
    }

    /// `h(t_i) = coefficient·(t_N − t_i)`.
    pub fn linear_in_remaining(coefficient: f64, params: &ProcessParams) -> Result<Self> {
        let n = params.n_steps;
        Self::new(
            (0..n)
                .map(|i| coefficient * (n - i) as f64 * params.dt)
                .collect(),
        )
    }

    /// All-zero schedule.
    pub fn zero(n_steps: usize) -> Self {
        Self {
            rates: vec![0.0; n_steps],
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn rate(&self, i: usize) -> f64 {
        self.rates[i]
    }

    /// Multiplies every rate by `factor` (must be nonnegative).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.rates.iter().map(|h| h * factor).collect())
    }

    /// Holding cost of buying at step `n`: `dt·Σ_{i=n}^{N−1} h(t_i)`; zero at `n = N`.
    pub fn tail(&self, dt: f64, n: usize) -> f64 {
        if n >= self.rates.len() {
            return 0.0;
        }
        dt * self.rates[n..].iter().sum::<f64>()
    }

    /// Tails for `n = 0..=N`.
    pub fn tails(&self, dt: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.rates.len() + 1];
        for n in (0..self.rates.len()).rev() {
            out[n] = out[n + 1] + dt * self.rates[n];
        }
        out
    }

    pub(crate) fn check_against(&self, params: &ProcessParams) -> Result<()> {
        if self.rates.len() != params.n_steps {
            return Err(Error::InvalidArgument(format!(
                "holding schedule has {} entries, expected N = {}",
                self.rates.len(),
                params.n_steps
            )));
        }
        Ok(())
    }
}

/// `E[X(t_i) | X(t_n) = x] = θ + (x − θ)·a^(i−n)`.
pub fn conditional_mean(params: &ProcessParams, x: f64, n: usize, i: usize) -> Result<f64> {
    params.check_order(n, i)?;
    Ok(mean_after(params, x, i - n))
}

/// `Var[X(t_i) | X(t_n)] = dt·σ²·(1 − a^(2(i−n))) / (1 − a²)`.
pub fn conditional_variance(params: &ProcessParams, n: usize, i: usize) -> Result<f64> {
    params.check_order(n, i)?;
    Ok(variance_after(params, i - n))
}

/// Correlation of the standardized prices at steps `l ≤ k`, both observed from `n`.
pub fn standardized_covariance(
    params: &ProcessParams,
    n: usize,
    l: usize,
    k: usize,
) -> Result<f64> {
    params.check_order(n, l)?;
    if l > k || k > params.n_steps {
        return Err(Error::InvalidArgument(format!(
            "standardized covariance needs n < l <= k <= N, got n = {n}, l = {l}, k = {k}"
        )));
    }
    Ok(correlation_after(params, l - n, k - n))
}

/// Correlation matrix of `Z(t_{n+1}), …, Z(t_i)`.
pub fn covariance_matrix(params: &ProcessParams, n: usize, i: usize) -> Result<DMatrix<f64>> {
    params.check_order(n, i)?;
    Ok(correlation_matrix(params, i - n))
}

/// Standardized thresholds `β_l = (b(t_l) − μ_l) / σ_l` for `l = n+1..=i`.
///
/// With `exclude_last` the entry for `t_i` is replaced by `−∞`.
pub fn standardized_thresholds(
    params: &ProcessParams,
    x: f64,
    n: usize,
    i: usize,
    thresholds: &[f64],
    exclude_last: bool,
) -> Result<Vec<f64>> {
    params.check_order(n, i)?;
    if thresholds.len() <= i {
        return Err(Error::InvalidArgument(format!(
            "threshold vector has {} entries, need an entry for step {i}",
            thresholds.len()
        )));
    }
    let mut beta: Vec<f64> = (n + 1..=i)
        .map(|l| standardize(thresholds[l], mean_after(params, x, l - n), variance_after(params, l - n).sqrt()))
        .collect();
    if exclude_last {
        *beta.last_mut().expect("i > n") = f64::NEG_INFINITY;
    }
    Ok(beta)
}

#[inline]
pub(crate) fn mean_after(params: &ProcessParams, x: f64, steps: usize) -> f64 {
    params.theta + (x - params.theta) * params.persistence().powi(steps as i32)
}

#[inline]
pub(crate) fn variance_after(params: &ProcessParams, steps: usize) -> f64 {
    let a = params.persistence();
    let a2 = a * a;
    params.dt * params.sigma * params.sigma * (1.0 - a2.powi(steps as i32)) / (1.0 - a2)
}

/// Correlation of `Z` at relative steps `l ≤ k` (counted from the conditioning step).
/// σ cancels, so only the persistence enters.
pub(crate) fn correlation_after(params: &ProcessParams, l: usize, k: usize) -> f64 {
    if l == k {
        return 1.0;
    }
    let a = params.persistence();
    let a2 = a * a;
    let g = |m: usize| (1.0 - a2.powi(m as i32)) / (1.0 - a2);
    a.powi((k - l) as i32) * g(l) / (g(l) * g(k)).sqrt()
}

pub(crate) fn correlation_matrix(params: &ProcessParams, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |r, c| {
        let (l, k) = if r <= c { (r + 1, c + 1) } else { (c + 1, r + 1) };
        correlation_after(params, l, k)
    })
}

/// `(b − μ) / s` on the extended reals.
#[inline]
pub(crate) fn standardize(b: f64, mean: f64, sd: f64) -> f64 {
    if b.is_infinite() {
        b
    } else {
        (b - mean) / sd
    }
}

/// Simulated price paths, one row per path; column `c` is step `n0 + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    n_paths: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl PathMatrix {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn path(&self, p: usize) -> &[f64] {
        &self.data[p * self.n_cols..(p + 1) * self.n_cols]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_paths).map(move |p| self.data[p * self.n_cols + c])
    }
}

/// Paths handed to each parallel task; fixed so results do not depend on scheduling.
pub(crate) const PATH_CHUNK: usize = 4096;

/// Independent noise stream for one path, keyed by `(seed, path)`.
pub(crate) fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Generates one step of the recursion from `x`.
#[inline]
pub(crate) fn step(params: &ProcessParams, x: f64, rng: &mut ChaCha8Rng) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    params.theta * params.kappa * params.dt
        + params.persistence() * x
        + params.sigma * params.dt.sqrt() * z
}

/// Simulates `n_paths` paths from `X(t_{n0}) = x0` to the horizon.
///
/// Output is bit-identical for identical `(params, x0, n0, n_paths, seed)`
/// whatever the thread count.
pub fn simulate_paths(
    params: &ProcessParams,
    x0: f64,
    n0: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathMatrix> {
    params.validate()?;
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    if n0 > params.n_steps {
        return Err(Error::InvalidArgument(format!(
            "start step {n0} exceeds horizon N = {}",
            params.n_steps
        )));
    }
    let n_cols = params.n_steps - n0 + 1;
    let mut data = vec![0.0; n_paths * n_cols];
    data.par_chunks_mut(PATH_CHUNK * n_cols)
        .enumerate()
        .for_each(|(chunk, rows)| {
            for (r, row) in rows.chunks_mut(n_cols).enumerate() {
                let mut rng = path_rng(seed, (chunk * PATH_CHUNK + r) as u64);
                row[0] = x0;
                for c in 1..n_cols {
                    row[c] = step(params, row[c - 1], &mut rng);
                }
            }
        });
    Ok(PathMatrix {
        n_paths,
        n_cols,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> ProcessParams {
        ProcessParams::new(10.0, 0.5, 1.0, 1.0, 15).unwrap()
    }

    #[test]
    fn mean_examples() {
        let p = unit();
        assert_eq!(conditional_mean(&p, 10.0, 3, 7).unwrap(), 10.0);
        assert_abs_diff_eq!(conditional_mean(&p, 20.0, 0, 2).unwrap(), 12.5, epsilon = 1e-14);
        let q = ProcessParams::new(0.0, 0.5, 1.0, 1.0, 4).unwrap();
        assert_abs_diff_eq!(conditional_mean(&q, 1.0, 0, 1).unwrap(), 0.5, epsilon = 1e-15);
        assert!(conditional_mean(&p, 1.0, 2, 2).is_err());
        assert!(conditional_mean(&p, 1.0, 0, 16).is_err());
    }

    #[test]
    fn variance_examples() {
        let p = unit();
        assert_abs_diff_eq!(conditional_variance(&p, 4, 5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(conditional_variance(&p, 0, 2).unwrap(), 1.25, epsilon = 1e-15);
        let far = conditional_variance(&p, 0, 15).unwrap();
        assert!(far < 4.0 / 3.0);
        assert_abs_diff_eq!(far, 4.0 / 3.0, epsilon = 1e-8);
        let mut prev = 0.0;
        for i in 1..=15 {
            let v = conditional_variance(&p, 0, i).unwrap();
            assert!(v > prev && v <= p.stationary_variance());
            prev = v;
        }
    }

    #[test]
    fn covariance_examples() {
        let p = unit();
        assert_eq!(standardized_covariance(&p, 0, 3, 3).unwrap(), 1.0);
        assert_abs_diff_eq!(
            standardized_covariance(&p, 0, 1, 2).unwrap(),
            0.5 / 1.25f64.sqrt(),
            epsilon = 1e-15
        );
        let row: Vec<f64> = (2..=15)
            .map(|k| standardized_covariance(&p, 0, 2, k).unwrap())
            .collect();
        assert!(row.windows(2).all(|w| w[1] < w[0]));
        assert!(standardized_covariance(&p, 2, 2, 3).is_err());
        assert!(standardized_covariance(&p, 0, 3, 2).is_err());
    }

    #[test]
    fn covariance_matrix_shape() {
        let p = unit();
        let m1 = covariance_matrix(&p, 4, 5).unwrap();
        assert_eq!(m1.shape(), (1, 1));
        assert_eq!(m1[(0, 0)], 1.0);
        let m2 = covariance_matrix(&p, 0, 2).unwrap();
        assert_abs_diff_eq!(m2[(0, 1)], 0.447213595499958, epsilon = 1e-12);
        assert_eq!(m2[(0, 1)], m2[(1, 0)]);
        for (n, i) in [(0, 15), (3, 9), (13, 15)] {
            let m = covariance_matrix(&p, n, i).unwrap();
            let eig = m.clone().symmetric_eigenvalues();
            assert!(eig.iter().all(|&e| e >= -1e-10));
            assert!((0..m.nrows()).all(|d| m[(d, d)] == 1.0));
        }
    }

    #[test]
    fn covariance_ignores_sigma_and_price() {
        for sigma in [0.5, 1.0, 2.0] {
            let p = ProcessParams::new(3.0, 0.3, sigma, 0.5, 12).unwrap();
            let base = ProcessParams::new(3.0, 0.3, 1.0, 0.5, 12).unwrap();
            for (l, k) in [(1, 1), (1, 5), (4, 11), (7, 12)] {
                assert_eq!(
                    standardized_covariance(&p, 0, l, k).unwrap(),
                    standardized_covariance(&base, 0, l, k).unwrap()
                );
            }
        }
    }

    #[test]
    fn standardized_threshold_examples() {
        let p = unit();
        let mut b = vec![0.0; 16];
        b[1] = 9.98;
        b[15] = f64::INFINITY;
        let beta = standardized_thresholds(&p, 12.0, 0, 1, &b, false).unwrap();
        assert_abs_diff_eq!(beta[0], -1.02, epsilon = 1e-12);
        let tail = standardized_thresholds(&p, 12.0, 13, 15, &b, false).unwrap();
        assert_eq!(tail[1], f64::INFINITY);
        let hat = standardized_thresholds(&p, 12.0, 0, 3, &b, true).unwrap();
        assert_eq!(hat[2], f64::NEG_INFINITY);
    }

    #[test]
    fn holding_schedule_validation() {
        let p = unit();
        let h = HoldingSchedule::linear_in_remaining(0.01, &p).unwrap();
        assert_eq!(h.len(), 15);
        assert_abs_diff_eq!(h.rate(0), 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(h.tail(1.0, 14), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(h.tail(1.0, 13), 0.03, epsilon = 1e-15);
        assert_eq!(h.tail(1.0, 15), 0.0);
        let tails = h.tails(1.0);
        for n in 0..=15 {
            assert_abs_diff_eq!(tails[n], h.tail(1.0, n), epsilon = 1e-12);
        }
        assert!(HoldingSchedule::new(vec![0.1, 0.2]).is_err());
        assert!(HoldingSchedule::new(vec![0.1, -0.1]).is_err());
    }

    #[test]
    fn stationarity_is_enforced() {
        assert!(ProcessParams::new(0.0, 2.5, 1.0, 1.0, 5).is_err());
        assert!(ProcessParams::new(0.0, 0.0, 1.0, 1.0, 5).is_err());
        assert!(ProcessParams::new(0.0, 1.5, 1.0, 1.0, 5).is_ok());
        assert!(ProcessParams::new(0.0, 0.5, 0.0, 1.0, 5).is_err());
    }

    #[test]
    fn noise_free_paths_follow_the_mean() {
        let p = ProcessParams::new(10.0, 0.5, 1e-12, 1.0, 10).unwrap();
        let paths = simulate_paths(&p, 14.0, 0, 3, 7).unwrap();
        for c in 1..paths.n_cols() {
            let mu = conditional_mean(&p, 14.0, 0, c).unwrap();
            assert!(paths.column(c).all(|x| (x - mu).abs() <= 1e-6));
        }
    }

    #[test]
    fn paths_are_reproducible() {
        let p = unit();
        let a = simulate_paths(&p, 12.0, 3, 5000, 42).unwrap();
        let b = simulate_paths(&p, 12.0, 3, 5000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_paths(&p, 12.0, 3, 5000, 43).unwrap();
        assert_ne!(a, c);
        // a path does not depend on how many others are drawn
        let short = simulate_paths(&p, 12.0, 3, 10, 42).unwrap();
        assert_eq!(short.path(9), a.path(9));
    }
}
