//! Multivariate normal orthant probabilities and the conditioning helpers
//! used by the truncated-moment formulas.

use nalgebra::DMatrix;
use purchase_threshold::mvn::{
    conditional_truncation_coords, mvn_cdf, partial_correlation_matrix, MvnAccuracy,
};
use purchase_threshold::process::{covariance_matrix, standardized_thresholds};
use purchase_threshold::ProcessParams;

fn main() -> purchase_threshold::Result<()> {
    let acc = MvnAccuracy::default();

    let rho: f64 = 0.44721;
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
    let p = mvn_cdf(&[0.0, 0.0], &sigma, &acc)?;
    let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
    println!("bivariate orthant: {p:.15} (closed form {exact:.15})");

    // Correlations of the standardized prices over the next 5 steps.
    let params = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 6)?;
    let corr = covariance_matrix(&params, 0, 5)?;
    let b = [9.0, 9.2, 9.4, 9.6, 9.8, 9.9, f64::INFINITY];
    let beta = standardized_thresholds(&params, 12.0, 0, 5, &b, false)?;
    let limits: Vec<f64> = beta.iter().map(|v| -v).collect();
    println!("P(no crossing through t_5) = {:.12}", mvn_cdf(&limits, &corr, &acc)?);

    let m = partial_correlation_matrix(&corr, 2)?;
    let alpha = conditional_truncation_coords(&beta, &corr, 2, false)?;
    println!("partial correlations given Z_3:\n{m:.4}");
    println!("conditional truncation points: {alpha:.4?}");

    // A dense matrix takes the lattice path.
    let dense = DMatrix::from_fn(4, 4, |r, c| if r == c { 1.0 } else { 0.3 });
    let p = mvn_cdf(&[0.5, 0.0, -0.3, 1.0], &dense, &MvnAccuracy::with_abs_tol(1e-6))?;
    println!("equicorrelated 4-d: {p:.8}");
    Ok(())
}
