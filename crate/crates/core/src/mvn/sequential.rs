//! Orthant probabilities of Gauss-Markov chains by sequential quadrature.
//!
//! For `Z_1 ~ N(0, 1)` and `Z_k = r_k Z_{k−1} + √(1 − r_k²) W_k`, the
//! probability `Pr(Z_k ≤ a_k ∀k)` is a chain of one-dimensional integrals:
//! the sub-density of `Z_k` on `{Z_1 ≤ a_1, …, Z_k ≤ a_k}` is pushed forward
//! through the Gaussian transition kernel and truncated at each step. Each
//! truncated range is covered by composite Gauss–Legendre panels whose width
//! follows the kernel scale, and the last transition is integrated in closed
//! form with Φ.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::{std_normal_cdf, std_normal_pdf, FRAC_1_SQRT_2PI};
use crate::quadrature::gauss_legendre;

/// Mass of N(0, 1) outside `±SUPPORT` is below 1e−23.
const SUPPORT: f64 = 10.0;
const PANEL_ORDER: usize = 16;
const MAX_PANEL: f64 = 2.0;
/// Panel width in units of the kernel standard deviation.
const PANEL_PER_SCALE: f64 = 1.5;
/// Links this close to zero split the chain into independent blocks.
const ZERO_LINK: f64 = 1e-14;
/// Tolerance on `Σ_lk − Π r` when recognising a chain.
const STRUCTURE_TOL: f64 = 1e-10;
const MAX_LINK: f64 = 1.0 - 1e-9;

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

/// Returns the adjacent correlations `r_k = Σ_{k−1,k}` when `Σ` factors as a
/// Gauss-Markov chain in index order, `None` otherwise.
pub fn chain_links(sigma: &DMatrix<f64>) -> Option<Vec<f64>> {
    let m = sigma.nrows();
    if m == 0 || sigma.ncols() != m {
        return None;
    }
    let links: Vec<f64> = (1..m).map(|k| sigma[(k - 1, k)]).collect();
    if links.iter().any(|r| !r.is_finite() || r.abs() > MAX_LINK) {
        return None;
    }
    for l in 0..m {
        let mut prod = 1.0;
        for k in l + 1..m {
            prod *= links[k - 1];
            if (sigma[(l, k)] - prod).abs() > STRUCTURE_TOL
                || (sigma[(k, l)] - prod).abs() > STRUCTURE_TOL
            {
                return None;
            }
        }
    }
    Some(links)
}

/// Links of the sub-chain on the sorted indices `keep`.
pub fn marginal_links(links: &[f64], keep: &[usize]) -> Vec<f64> {
    keep.windows(2)
        .map(|w| links[w[0]..w[1]].iter().product())
        .collect()
}

/// `Pr(Z_k ≤ limits_k ∀k)` for the chain with adjacent correlations `links`
/// (`links.len() == limits.len() − 1`). Limits may be `±∞`.
pub fn chain_cdf(limits: &[f64], links: &[f64]) -> f64 {
    assert_eq!(links.len() + 1, limits.len(), "one link per adjacent pair");
    if limits.contains(&f64::NEG_INFINITY) {
        return 0.0;
    }
    let mut total = 1.0;
    let mut start = 0;
    for k in 0..=links.len() {
        if k == links.len() || links[k].abs() < ZERO_LINK {
            total *= block_cdf(&limits[start..=k], &links[start..k]);
            if total == 0.0 {
                return 0.0;
            }
            start = k + 1;
        }
    }
    total
}

fn block_cdf(limits: &[f64], links: &[f64]) -> f64 {
    let m = limits.len();
    if m == 1 {
        return std_normal_cdf(limits[0]);
    }
    let scale = |k: usize| -> f64 {
        // resolution needed by the sub-density of variable k
        let own = if k == 0 { 1.0 } else { conditional_sd(links[k - 1]) };
        let next = if k + 1 < m {
            let r = links[k].abs();
            conditional_sd(links[k]) / r.max(1e-300)
        } else {
            f64::INFINITY
        };
        own.min(next)
    };

    let (mut ys, weights) = match panel_nodes(limits[0], scale(0)) {
        Some(v) => v,
        None => return 0.0,
    };
    let mut g: Vec<f64> = ys
        .iter()
        .zip(&weights)
        .map(|(&y, &w)| w * std_normal_pdf(y))
        .collect();

    for k in 1..m - 1 {
        let r = links[k - 1];
        let s = conditional_sd(r);
        let (zs, wz) = match panel_nodes(limits[k], scale(k)) {
            Some(v) => v,
            None => return 0.0,
        };
        let inv_s = 1.0 / s;
        let ry: Vec<f64> = ys.iter().map(|&y| r * y).collect();
        let next: Vec<f64> = zs
            .iter()
            .zip(&wz)
            .map(|(&z, &w)| {
                let acc: f64 = ry
                    .iter()
                    .zip(&g)
                    .map(|(&ry, &gy)| {
                        let u = (z - ry) * inv_s;
                        gy * (-0.5 * u * u).exp()
                    })
                    .sum();
                w * acc * inv_s * FRAC_1_SQRT_2PI
            })
            .collect();
        ys = zs;
        g = next;
    }

    let r = links[m - 2];
    let s = conditional_sd(r);
    let last = limits[m - 1];
    let p: f64 = ys
        .iter()
        .zip(&g)
        .map(|(&y, &gy)| {
            let u = if last == f64::INFINITY {
                f64::INFINITY
            } else {
                (last - r * y) / s
            };
            gy * std_normal_cdf(u)
        })
        .sum();
    p.clamp(0.0, 1.0)
}

#[inline]
fn conditional_sd(r: f64) -> f64 {
    (1.0 - r * r).sqrt()
}

/// Composite Gauss–Legendre nodes on `[−SUPPORT, min(upper, SUPPORT)]`.
fn panel_nodes(upper: f64, scale: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let hi = upper.min(SUPPORT);
    let lo = -SUPPORT;
    if hi <= lo {
        return None;
    }
    let width = (PANEL_PER_SCALE * scale).min(MAX_PANEL);
    let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
    let h = (hi - lo) / panels as f64;
    let (x, w) = rule();
    let mut nodes = Vec::with_capacity(panels * x.len());
    let mut weights = Vec::with_capacity(panels * x.len());
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for (&xi, &wi) in x.iter().zip(w) {
            nodes.push(mid + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    Some((nodes, weights))
}
