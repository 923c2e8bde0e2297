//! Crossing-time probabilities and overshoot expectations.
//!
//! Starting from `X(t_n) = x`, the crossing time `τ` is the first step
//! `t_i > t_n` with `X(t_i) ≤ b(t_i)`; the threshold vector always ends with
//! `b(t_N) = +∞`, so `τ ≤ t_N`. In terms of the standardized Gauss-Markov
//! chain `Z(t_{n+1}), …, Z(t_N)` with levels `β_l`:
//!
//! * survival `S_k = Pr(τ > t_{n+k}) = F(−β_{1..k}, Σ_{1..k})`,
//! * `P(τ = t_{n+k}) = S_{k−1} − S_k`,
//! * the mean of `X(t_{n+k})` on a survival event comes from Tallis' formula
//!   for a lower-truncated multivariate normal: `μ_k + σ_k·T_k / S_k`, with
//!   `T_k = Σ_l Σ_{kl} φ(β_l) F(−α_{·|l}, M_l)`.
//!
//! [`crossing_distribution`] assembles `P_i·E_i` as
//! `S_{k−1}·E[X | τ > t_{k−1}] − S_k·E[X | τ > t_k]`, where every factor is a
//! Tallis numerator, so no division by a small probability happens.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mvn::{
    conditional_truncation_coords, mvn_cdf, partial_correlation_matrix, std_normal_pdf,
    MvnAccuracy,
};
use crate::process::{correlation_matrix, mean_after, standardize, variance_after, ProcessParams};

/// Probabilities below this are too small for a meaningful conditional mean.
pub const MIN_CONDITIONING_PROBABILITY: f64 = 1e-300;

/// Below this `P_i`, [`overshoot_expectation`] refuses to divide.
pub const MIN_OVERSHOOT_PROBABILITY: f64 = 1e-12;

/// Distribution of the crossing time and the price at crossing, for
/// `i = n+1..=N` (entry `k` of each vector is step `n + 1 + k`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingDistribution {
    pub start_step: usize,
    pub start_price: f64,
    /// `P(τ = t_i)`.
    pub probs: Vec<f64>,
    /// `P(τ > t_i)`.
    pub survivals: Vec<f64>,
    /// `P(τ = t_i)·E[X(t_i) | τ = t_i]`.
    pub weighted_overshoots: Vec<f64>,
    /// `E[X(t_i) | τ = t_i]`, absent where `P(τ = t_i) < 1e−12`.
    pub overshoots: Vec<Option<f64>>,
}

impl CrossingDistribution {
    /// Crossing steps `n+1..=N`.
    pub fn steps(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.probs.len()).map(move |k| self.start_step + k)
    }

    /// `E[X(τ)]`, the expected purchase price under the thresholds.
    pub fn expected_crossing_price(&self) -> f64 {
        self.weighted_overshoots.iter().sum()
    }

    pub fn total_probability(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Standardized quantities seen from `(x, n)` for relative steps `1..=m`.
struct Frame {
    mean: Vec<f64>,
    sd: Vec<f64>,
    beta: Vec<f64>,
    corr: DMatrix<f64>,
}

impl Frame {
    fn new(params: &ProcessParams, x: f64, n: usize, m: usize, thresholds: &[f64]) -> Self {
        let mean: Vec<f64> = (1..=m).map(|k| mean_after(params, x, k)).collect();
        let sd: Vec<f64> = (1..=m).map(|k| variance_after(params, k).sqrt()).collect();
        let beta = (0..m)
            .map(|k| standardize(thresholds[n + 1 + k], mean[k], sd[k]))
            .collect();
        Self {
            mean,
            sd,
            beta,
            corr: correlation_matrix(params, m),
        }
    }

    fn block(&self, k: usize) -> DMatrix<f64> {
        self.corr.view((0, 0), (k, k)).into_owned()
    }

    /// `F(−β_{1..k}, Σ_{1..k})`, the probability of no crossing through relative step `k`.
    fn survival(&self, k: usize, acc: &MvnAccuracy) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let limits: Vec<f64> = self.beta[..k].iter().map(|b| -b).collect();
        mvn_cdf(&limits, &self.block(k), acc)
    }

    /// Tallis numerator for the mean of `Z_k` on `{Z_l > β_l, l ≤ k}`; with
    /// `exclude_last` the constraint on `Z_k` itself is dropped.
    fn tallis_sum(&self, k: usize, exclude_last: bool, acc: &MvnAccuracy) -> Result<f64> {
        let sigma = self.block(k);
        let mut beta = self.beta[..k].to_vec();
        if exclude_last {
            beta[k - 1] = f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for l in 0..k {
            let density = std_normal_pdf(beta[l]);
            let cov = sigma[(k - 1, l)];
            if density == 0.0 || cov == 0.0 {
                continue;
            }
            let tail = if k == 1 {
                1.0
            } else {
                let alpha = conditional_truncation_coords(&beta, &sigma, l, exclude_last)?;
                let limits: Vec<f64> = alpha.iter().map(|a| -a).collect();
                mvn_cdf(&limits, &partial_correlation_matrix(&sigma, l)?, acc)?
            };
            total += cov * density * tail;
        }
        Ok(total)
    }
}

fn check_request(
    params: &ProcessParams,
    n: usize,
    i: usize,
    thresholds: &[f64],
) -> Result<()> {
    params.validate()?;
    if n >= i || i > params.n_steps {
        return Err(Error::InvalidArgument(format!(
            "crossing step must satisfy n < i <= N, got n = {n}, i = {i}, N = {}",
            params.n_steps
        )));
    }
    check_thresholds(params, thresholds)
}

pub(crate) fn check_thresholds(params: &ProcessParams, thresholds: &[f64]) -> Result<()> {
    if thresholds.len() != params.n_steps + 1 {
        return Err(Error::InvalidArgument(format!(
            "threshold vector has {} entries, expected N + 1 = {}",
            thresholds.len(),
            params.n_steps + 1
        )));
    }
    if thresholds[params.n_steps] != f64::INFINITY {
        return Err(Error::InvalidArgument(
            "the threshold at the horizon must be +inf".into(),
        ));
    }
    if thresholds.iter().any(|b| b.is_nan()) {
        return Err(Error::InvalidArgument("threshold vector contains NaN".into()));
    }
    Ok(())
}

/// `P(τ = t_i)` from `(x, t_n)`: `F(−B̂) − F(−B)`.
pub fn crossing_probability(
    params: &ProcessParams,
    x: f64,
    n: usize,
    i: usize,
    thresholds: &[f64],
    acc: &MvnAccuracy,
) -> Result<f64> {
    check_request(params, n, i, thresholds)?;
    let k = i - n;
    let frame = Frame::new(params, x, n, k, thresholds);
    let before = frame.survival(k - 1, acc)?;
    let after = frame.survival(k, acc)?;
    Ok((before - after).max(0.0))
}

/// `E[X(t_i) | τ > t_i]`, or `E[X(t_i) | τ > t_{i−1}]` with `exclude_last`.
pub fn truncated_survivor_mean(
    params: &ProcessParams,
    x: f64,
    n: usize,
    i: usize,
    thresholds: &[f64],
    exclude_last: bool,
    acc: &MvnAccuracy,
) -> Result<f64> {
    check_request(params, n, i, thresholds)?;
    let k = i - n;
    let frame = Frame::new(params, x, n, k, thresholds);
    let survival = frame.survival(if exclude_last { k - 1 } else { k }, acc)?;
    if survival < MIN_CONDITIONING_PROBABILITY {
        return Err(Error::DegenerateConditioning {
            probability: survival,
        });
    }
    let numerator = frame.tallis_sum(k, exclude_last, acc)?;
    Ok(frame.mean[k - 1] + frame.sd[k - 1] * numerator / survival)
}

/// `P(τ = t_i | τ > t_{i−1})`.
pub fn conditional_crossing_probability(
    params: &ProcessParams,
    x: f64,
    n: usize,
    i: usize,
    thresholds: &[f64],
    acc: &MvnAccuracy,
) -> Result<f64> {
    check_request(params, n, i, thresholds)?;
    let k = i - n;
    let frame = Frame::new(params, x, n, k, thresholds);
    let before = frame.survival(k - 1, acc)?;
    if before < MIN_CONDITIONING_PROBABILITY {
        return Err(Error::DegenerateConditioning {
            probability: before,
        });
    }
    let after = frame.survival(k, acc)?;
    Ok(((before - after) / before).clamp(0.0, 1.0))
}

/// `E[X(t_i) | τ = t_i]` by the total-expectation identity
/// `E = [E(X | τ > t_{i−1}) − (1 − p)·E(X | τ > t_i)] / p`,
/// `p = P(τ = t_i | τ > t_{i−1})`.
///
/// Fails with [`Error::DegenerateConditioning`] when `P(τ = t_i) < 1e−12`;
/// [`crossing_distribution`] has the division-free form.
pub fn overshoot_expectation(
    params: &ProcessParams,
    x: f64,
    n: usize,
    i: usize,
    thresholds: &[f64],
    acc: &MvnAccuracy,
) -> Result<f64> {
    check_request(params, n, i, thresholds)?;
    let k = i - n;
    let frame = Frame::new(params, x, n, k, thresholds);
    let before = frame.survival(k - 1, acc)?;
    let after = frame.survival(k, acc)?;
    let prob = before - after;
    if prob < MIN_OVERSHOOT_PROBABILITY {
        return Err(Error::DegenerateConditioning { probability: prob });
    }
    let p_cond = prob / before;
    let (mu, sd) = (frame.mean[k - 1], frame.sd[k - 1]);
    let mean_before = mu + sd * frame.tallis_sum(k, true, acc)? / before;
    let survivor_term = if after < MIN_CONDITIONING_PROBABILITY {
        0.0
    } else {
        let mean_after = mu + sd * frame.tallis_sum(k, false, acc)? / after;
        (1.0 - p_cond) * mean_after
    };
    Ok((mean_before - survivor_term) / p_cond)
}

/// All crossing probabilities, survivals and overshoots from `(x, t_n)`.
pub fn crossing_distribution(
    params: &ProcessParams,
    x: f64,
    n: usize,
    thresholds: &[f64],
    acc: &MvnAccuracy,
) -> Result<CrossingDistribution> {
    check_request(params, n, params.n_steps, thresholds)?;
    let m = params.n_steps - n;
    let frame = Frame::new(params, x, n, m, thresholds);

    // Per relative step k: (S_k, T_k, T̂_k).
    let parts: Vec<(f64, f64, f64)> = (1..=m)
        .into_par_iter()
        .map(|k| {
            let survival = frame.survival(k, acc)?;
            let full = if survival > 0.0 {
                frame.tallis_sum(k, false, acc)?
            } else {
                0.0
            };
            let hat = frame.tallis_sum(k, true, acc)?;
            Ok((survival, full, hat))
        })
        .collect::<Result<_>>()?;

    let mut probs = Vec::with_capacity(m);
    let mut survivals = Vec::with_capacity(m);
    let mut weighted = Vec::with_capacity(m);
    let mut overshoots = Vec::with_capacity(m);
    let mut before = 1.0;
    for (k, &(survival, full, hat)) in parts.iter().enumerate() {
        let prob = (before - survival).max(0.0);
        let w = (before - survival) * frame.mean[k] + frame.sd[k] * (hat - full);
        probs.push(prob);
        survivals.push(survival);
        weighted.push(w);
        overshoots.push((prob >= MIN_OVERSHOOT_PROBABILITY).then(|| w / prob));
        before = survival;
    }
    Ok(CrossingDistribution {
        start_step: n,
        start_price: x,
        probs,
        survivals,
        weighted_overshoots: weighted,
        overshoots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mvn::std_normal_cdf;
    use approx::assert_abs_diff_eq;

    fn fig1() -> ProcessParams {
        ProcessParams::new(10.0, 0.5, 1.0, 1.0, 15).unwrap()
    }

    /// Thresholds with `b(t_1) = 9.98` seen from x = 12 at n = 0: μ = 11, σ = 1, β = −1.02.
    fn one_step_levels() -> Vec<f64> {
        let mut b = vec![9.0; 16];
        b[1] = 9.98;
        b[15] = f64::INFINITY;
        b
    }

    #[test]
    fn first_step_reduces_to_univariate() {
        let p = fig1();
        let b = one_step_levels();
        let acc = MvnAccuracy::default();
        let beta = -1.02;
        let prob = crossing_probability(&p, 12.0, 0, 1, &b, &acc).unwrap();
        assert_abs_diff_eq!(prob, std_normal_cdf(beta), epsilon = 1e-10);
        assert_abs_diff_eq!(prob, 0.153864, epsilon = 1e-6);

        let above = truncated_survivor_mean(&p, 12.0, 0, 1, &b, false, &acc).unwrap();
        let want = 11.0 + std_normal_pdf(beta) / (1.0 - std_normal_cdf(beta));
        assert_abs_diff_eq!(above, want, epsilon = 1e-10);
        assert_abs_diff_eq!(above, 11.280_252_839_474_97, epsilon = 1e-9);

        let vacuous = truncated_survivor_mean(&p, 12.0, 0, 1, &b, true, &acc).unwrap();
        assert_eq!(vacuous, 11.0);

        let below = overshoot_expectation(&p, 12.0, 0, 1, &b, &acc).unwrap();
        let want = 11.0 - std_normal_pdf(beta) / std_normal_cdf(beta);
        assert_abs_diff_eq!(below, want, epsilon = 1e-10);
        assert_abs_diff_eq!(below, 9.458_823_396_153_03, epsilon = 1e-9);
        assert!(below <= 9.98);

        let cond = conditional_crossing_probability(&p, 12.0, 0, 1, &b, &acc).unwrap();
        assert_abs_diff_eq!(cond, prob, epsilon = 1e-15);
    }

    #[test]
    fn unreachable_thresholds_put_all_mass_at_the_deadline() {
        let p = fig1();
        let mut b = vec![f64::NEG_INFINITY; 16];
        b[15] = f64::INFINITY;
        let acc = MvnAccuracy::default();
        let dist = crossing_distribution(&p, 12.0, 3, &b, &acc).unwrap();
        let last = dist.probs.len() - 1;
        for (k, &pr) in dist.probs.iter().enumerate() {
            assert_eq!(pr, if k == last { 1.0 } else { 0.0 });
        }
        let mu = mean_after(&p, 12.0, 12);
        assert_abs_diff_eq!(dist.overshoots[last].unwrap(), mu, epsilon = 1e-12);
        let untruncated = truncated_survivor_mean(&p, 12.0, 3, 9, &b, false, &acc).unwrap();
        assert_abs_diff_eq!(untruncated, mean_after(&p, 12.0, 6), epsilon = 1e-12);
        assert_eq!(crossing_probability(&p, 12.0, 3, 15, &b, &acc).unwrap(), 1.0);
        assert_eq!(
            conditional_crossing_probability(&p, 12.0, 3, 15, &b, &acc).unwrap(),
            1.0
        );
    }

    #[test]
    fn decomposition_identity_holds() {
        let p = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 6).unwrap();
        let b = vec![9.2, 9.4, 9.55, 9.7, 9.85, 9.95, f64::INFINITY];
        let acc = MvnAccuracy::default();
        let dist = crossing_distribution(&p, 11.0, 0, &b, &acc).unwrap();
        assert_abs_diff_eq!(dist.total_probability(), 1.0, epsilon = 1e-9);
        let mut before = 1.0;
        for k in 0..dist.probs.len() {
            let i = k + 1;
            let mean_before = truncated_survivor_mean(&p, 11.0, 0, i, &b, true, &acc).unwrap();
            let lhs = before * mean_before;
            let rhs = if dist.survivals[k] > 0.0 {
                dist.weighted_overshoots[k]
                    + dist.survivals[k]
                        * truncated_survivor_mean(&p, 11.0, 0, i, &b, false, &acc).unwrap()
            } else {
                dist.weighted_overshoots[k]
            };
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
            if k + 1 < dist.probs.len() {
                let e = overshoot_expectation(&p, 11.0, 0, i, &b, &acc).unwrap();
                assert!(e <= b[i] + 1e-9);
                assert_abs_diff_eq!(e, dist.overshoots[k].unwrap(), epsilon = 1e-8);
            }
            before = dist.survivals[k];
        }
        // survival through t_i is F(−B̂) one step later
        for i in 1..6 {
            let s = 1.0 - dist.probs[..i].iter().sum::<f64>();
            assert_abs_diff_eq!(dist.survivals[i - 1], s, epsilon = 1e-9);
        }
        let deadline = truncated_survivor_mean(&p, 11.0, 0, 6, &b, true, &acc).unwrap();
        assert_abs_diff_eq!(
            overshoot_expectation(&p, 11.0, 0, 6, &b, &acc).unwrap(),
            deadline,
            epsilon = 1e-9
        );
    }

    #[test]
    fn rejects_bad_requests() {
        let p = fig1();
        let acc = MvnAccuracy::default();
        let mut b = one_step_levels();
        assert!(crossing_probability(&p, 12.0, 2, 2, &b, &acc).is_err());
        b[15] = 11.0;
        assert!(crossing_distribution(&p, 12.0, 0, &b, &acc).is_err());
        let b = one_step_levels();
        assert!(matches!(
            truncated_survivor_mean(&p, 12.0, 13, 15, &b, false, &acc),
            Err(Error::DegenerateConditioning { .. })
        ));
    }
}
