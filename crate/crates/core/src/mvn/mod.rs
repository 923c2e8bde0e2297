//! Standard multivariate normal kernels.
//!
//! [`mvn_cdf`] evaluates `Pr(Z_j ≤ a_j ∀j)` for a correlation matrix `Σ`.
//! Coordinates at `+∞` are marginalized out and any `−∞` coordinate gives
//! zero. Matrices whose correlations factor along the index order
//! (`Σ_lk = Π_{m=l}^{k−1} Σ_{m,m+1}`, the Gauss-Markov case that every matrix
//! built from the price process falls into) are integrated by deterministic
//! sequential quadrature; all others go through the randomized lattice rule.

pub mod lattice;
pub mod sequential;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{Error, Result};

/// Largest dimension accepted by the general (non-Markov) engine.
pub const MAX_GENERAL_DIM: usize = 25;

/// Eigenvalues down to this are treated as zero.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Accuracy and reproducibility settings for orthant probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvnAccuracy {
    /// Absolute error target.
    pub abs_tol: f64,
    /// Upper bound on integrand evaluations for the lattice engine.
    pub sample_budget: usize,
    /// Seed for the random lattice shifts.
    pub rng_seed: u64,
}

impl Default for MvnAccuracy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            sample_budget: 4_000_000,
            rng_seed: 0x5eed,
        }
    }
}

impl MvnAccuracy {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.sample_budget == 0 {
            return Err(Error::InvalidArgument("sample_budget must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
    }
}

/// Standard normal distribution function.
#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        1.0
    } else if z == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Inverse of [`std_normal_cdf`].
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        let z = -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p);
        // one Newton step against the accurate distribution function
        let d = std_normal_pdf(z);
        if d > 0.0 {
            z - (std_normal_cdf(z) - p) / d
        } else {
            z
        }
    }
}

/// `Pr(Z ≤ a)` for `Z ~ N(0, Σ)` with unit-diagonal `Σ`.
pub fn mvn_cdf(a: &[f64], sigma: &DMatrix<f64>, acc: &MvnAccuracy) -> Result<f64> {
    let m = check_inputs(a, sigma)?;
    let markov = sequential::chain_links(sigma);
    if markov.is_none() && m > 1 {
        check_psd(sigma)?;
    }
    if a.contains(&f64::NEG_INFINITY) {
        return Ok(0.0);
    }
    let keep: Vec<usize> = (0..m).filter(|&j| a[j] < f64::INFINITY).collect();
    match keep.len() {
        0 => return Ok(1.0),
        1 => return Ok(std_normal_cdf(a[keep[0]])),
        _ => {}
    }
    let limits: Vec<f64> = keep.iter().map(|&j| a[j]).collect();
    if let Some(links) = markov {
        let reduced = if keep.len() == m {
            links
        } else {
            sequential::marginal_links(&links, &keep)
        };
        return Ok(sequential::chain_cdf(&limits, &reduced));
    }
    if keep.len() > MAX_GENERAL_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension {} exceeds the general-engine cap of {MAX_GENERAL_DIM}",
            keep.len()
        )));
    }
    let sub = sigma.select_rows(&keep).select_columns(&keep);
    acc.validate()?;
    Ok(lattice::lattice_cdf(&limits, &sub, acc).value)
}

fn check_inputs(a: &[f64], sigma: &DMatrix<f64>) -> Result<usize> {
    let m = sigma.nrows();
    if sigma.ncols() != m {
        return Err(Error::InvalidArgument(format!(
            "correlation matrix must be square, got {}x{}",
            m,
            sigma.ncols()
        )));
    }
    if a.len() != m {
        return Err(Error::InvalidArgument(format!(
            "limit vector has {} entries but matrix has order {m}",
            a.len()
        )));
    }
    if a.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("limit vector contains NaN".into()));
    }
    for r in 0..m {
        if (sigma[(r, r)] - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "diagonal entry {r} is {}, expected 1",
                sigma[(r, r)]
            )));
        }
        for c in 0..r {
            let (u, v) = (sigma[(r, c)], sigma[(c, r)]);
            if !u.is_finite() || (u - v).abs() > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not symmetric at ({r}, {c})"
                )));
            }
        }
    }
    Ok(m)
}

fn check_psd(sigma: &DMatrix<f64>) -> Result<()> {
    let min = sigma
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE {
        return Err(Error::NumericDomain(format!(
            "correlation matrix is not positive semi-definite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(())
}

fn check_conditioning(sigma: &DMatrix<f64>, j: usize) -> Result<usize> {
    let m = sigma.nrows();
    if sigma.ncols() != m {
        return Err(Error::InvalidArgument("correlation matrix must be square".into()));
    }
    if j >= m {
        return Err(Error::InvalidArgument(format!(
            "conditioning index {j} out of range for order {m}"
        )));
    }
    for l in (0..m).filter(|&l| l != j) {
        if 1.0 - sigma[(l, j)].abs() <= 1e-12 {
            return Err(Error::SingularConditioning { row: l, col: j });
        }
    }
    Ok(m)
}

/// First-order partial correlations of the remaining variables after
/// conditioning on variable `j`:
/// `ρ_{lm·j} = (Σ_lm − Σ_lj Σ_mj) / (√(1 − Σ_lj²) √(1 − Σ_mj²))`.
pub fn partial_correlation_matrix(sigma: &DMatrix<f64>, j: usize) -> Result<DMatrix<f64>> {
    let m = check_conditioning(sigma, j)?;
    let rest: Vec<usize> = (0..m).filter(|&l| l != j).collect();
    let scale: Vec<f64> = rest
        .iter()
        .map(|&l| (1.0 - sigma[(l, j)] * sigma[(l, j)]).sqrt())
        .collect();
    Ok(DMatrix::from_fn(rest.len(), rest.len(), |r, c| {
        if r == c {
            return 1.0;
        }
        let (l, k) = (rest[r], rest[c]);
        let v = (sigma[(l, k)] - sigma[(l, j)] * sigma[(k, j)]) / (scale[r] * scale[c]);
        v.clamp(-1.0, 1.0)
    }))
}

/// Standardized limits of the remaining coordinates given `Z_j = β_j`:
/// `α_l = (β_l − Σ_lj β_j) / √(1 − Σ_lj²)`, `l ≠ j`.
///
/// With `exclude_last` the coordinate for the last index is `−∞`.
pub fn conditional_truncation_coords(
    beta: &[f64],
    sigma: &DMatrix<f64>,
    j: usize,
    exclude_last: bool,
) -> Result<Vec<f64>> {
    let m = check_conditioning(sigma, j)?;
    if beta.len() != m {
        return Err(Error::InvalidArgument(format!(
            "beta has {} entries but matrix has order {m}",
            beta.len()
        )));
    }
    let mut out = Vec::with_capacity(m - 1);
    for l in (0..m).filter(|&l| l != j) {
        if exclude_last && l == m - 1 {
            out.push(f64::NEG_INFINITY);
            continue;
        }
        let rho = sigma[(l, j)];
        let shifted = if rho == 0.0 { beta[l] } else { beta[l] - rho * beta[j] };
        let alpha = shifted / (1.0 - rho * rho).sqrt();
        if alpha.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "conditional limit for coordinate {l} is undefined (beta_l = {}, beta_j = {})",
                beta[l], beta[j]
            )));
        }
        out.push(alpha);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn corr2(rho: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])
    }

    #[test]
    fn pdf_values() {
        assert_abs_diff_eq!(std_normal_pdf(0.0), 0.3989422804, epsilon = 1e-10);
        assert_eq!(std_normal_pdf(f64::INFINITY), 0.0);
        assert_eq!(std_normal_pdf(f64::NEG_INFINITY), 0.0);
        for z in [0.5, 1.02, 3.0] {
            assert_eq!(std_normal_pdf(z), std_normal_pdf(-z));
        }
    }

    #[test]
    fn cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        // erfc(1.02/√2)/2 from a 30-digit evaluation
        assert_abs_diff_eq!(std_normal_cdf(-1.02), 0.153_864_230_372_734_86, epsilon = 1e-13);
        for p in [1e-12, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-9] {
            assert_abs_diff_eq!(std_normal_cdf(std_normal_quantile(p)), p, epsilon = 1e-14);
        }
    }

    #[test]
    fn small_cases() {
        let acc = MvnAccuracy::default();
        let one = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(mvn_cdf(&[0.0], &one, &acc).unwrap(), 0.5);
        let id = DMatrix::<f64>::identity(2, 2);
        assert_abs_diff_eq!(mvn_cdf(&[0.0, 0.0], &id, &acc).unwrap(), 0.25, epsilon = 1e-12);
        let r: f64 = 0.44721;
        let expected = 0.25 + r.asin() / (2.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(mvn_cdf(&[0.0, 0.0], &corr2(r), &acc).unwrap(), expected, epsilon = 1e-10);
        assert_abs_diff_eq!(expected, 0.32379, epsilon = 1e-5);
    }

    #[test]
    fn infinite_limits() {
        let acc = MvnAccuracy::default();
        let s = corr2(0.6);
        assert_eq!(mvn_cdf(&[f64::NEG_INFINITY, 3.0], &s, &acc).unwrap(), 0.0);
        assert_eq!(mvn_cdf(&[f64::INFINITY, f64::INFINITY], &s, &acc).unwrap(), 1.0);
        assert_eq!(
            mvn_cdf(&[0.3, f64::INFINITY], &s, &acc).unwrap(),
            std_normal_cdf(0.3)
        );
    }

    #[test]
    fn input_errors() {
        let acc = MvnAccuracy::default();
        let s = corr2(0.2);
        assert!(matches!(mvn_cdf(&[0.0], &s, &acc), Err(Error::InvalidArgument(_))));
        let bad = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0],
        );
        assert!(matches!(
            mvn_cdf(&[0.0, 0.0, 0.0], &bad, &acc),
            Err(Error::NumericDomain(_))
        ));
    }

    #[test]
    fn partial_correlations() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert_eq!(partial_correlation_matrix(&id, 2).unwrap(), DMatrix::identity(3, 3));
        let half = DMatrix::from_fn(3, 3, |r, c| if r == c { 1.0 } else { 0.5 });
        let p = partial_correlation_matrix(&half, 0).unwrap();
        assert_abs_diff_eq!(p[(0, 1)], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(p[(0, 0)], 1.0);
        let singular = corr2(1.0);
        assert!(matches!(
            partial_correlation_matrix(&singular, 0),
            Err(Error::SingularConditioning { .. })
        ));
    }

    #[test]
    fn truncation_coords() {
        let id = DMatrix::<f64>::identity(3, 3);
        let beta = [0.3, -1.0, 2.0];
        assert_eq!(
            conditional_truncation_coords(&beta, &id, 1, false).unwrap(),
            vec![0.3, 2.0]
        );
        for rho in [-0.7, 0.0, 0.4] {
            let a = conditional_truncation_coords(&[0.0, 0.0], &corr2(rho), 1, false).unwrap();
            assert_eq!(a[0], 0.0);
        }
        let half = DMatrix::from_fn(3, 3, |r, c| if r == c { 1.0 } else { 0.5 });
        let hat = conditional_truncation_coords(&beta, &half, 0, true).unwrap();
        assert_abs_diff_eq!(hat[0], (-1.0 - 0.15) / 0.75f64.sqrt(), epsilon = 1e-15);
        assert_eq!(hat[1], f64::NEG_INFINITY);
    }
}
