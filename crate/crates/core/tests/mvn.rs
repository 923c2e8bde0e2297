use nalgebra::DMatrix;
use proptest::prelude::*;
use purchase_threshold::mvn::lattice::lattice_cdf;
use purchase_threshold::mvn::sequential::chain_cdf;
use purchase_threshold::mvn::{mvn_cdf, partial_correlation_matrix, MvnAccuracy};
use purchase_threshold::process::covariance_matrix;
use purchase_threshold::{Error, ProcessParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn chain_matrix(links: &[f64]) -> DMatrix<f64> {
    let m = links.len() + 1;
    DMatrix::from_fn(m, m, |a, b| {
        let (l, k) = (a.min(b), a.max(b));
        links[l..k].iter().product::<f64>()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The deterministic chain integrator and the lattice engine agree.
    #[test]
    fn chain_matches_lattice(
        links in prop::collection::vec(-0.9..0.95f64, 1..5),
        limits in prop::collection::vec(-1.5..2.0f64, 6),
    ) {
        let m = links.len() + 1;
        let a = &limits[..m];
        let sigma = chain_matrix(&links);
        let chain = chain_cdf(a, &links);
        let lattice = lattice_cdf(a, &sigma, &MvnAccuracy::with_abs_tol(2e-6));
        prop_assert!((chain - lattice.value).abs() <= lattice.error.max(2e-6) + 1e-7,
            "chain {} lattice {} ± {}", chain, lattice.value, lattice.error);
    }

    /// Adding an unconstrained coordinate changes nothing.
    #[test]
    fn infinite_limit_marginalizes(links in prop::collection::vec(0.1..0.9f64, 2..5), a in -1.0..1.0f64) {
        let m = links.len() + 1;
        let sigma = chain_matrix(&links);
        let mut limits = vec![a; m];
        limits[1] = f64::INFINITY;
        let full = mvn_cdf(&limits, &sigma, &MvnAccuracy::default()).unwrap();
        let keep: Vec<usize> = (0..m).filter(|&i| i != 1).collect();
        let sub = DMatrix::from_fn(m - 1, m - 1, |r, c| sigma[(keep[r], keep[c])]);
        let reduced = mvn_cdf(&vec![a; m - 1], &sub, &MvnAccuracy::default()).unwrap();
        prop_assert!((full - reduced).abs() < 1e-12);
    }

    /// Orthant probabilities are monotone in every limit.
    #[test]
    fn monotone_in_limits(links in prop::collection::vec(-0.8..0.8f64, 1..5), bump in 0.01..1.0f64) {
        let m = links.len() + 1;
        let sigma = chain_matrix(&links);
        let acc = MvnAccuracy::default();
        let base = vec![0.3; m];
        let p0 = mvn_cdf(&base, &sigma, &acc).unwrap();
        for j in 0..m {
            let mut up = base.clone();
            up[j] += bump;
            prop_assert!(mvn_cdf(&up, &sigma, &acc).unwrap() >= p0 - 1e-13);
        }
    }
}

/// Random dense correlation matrices against plain Monte Carlo.
#[test]
fn general_matrices_match_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let acc = MvnAccuracy::with_abs_tol(1e-5);
    let n_samples = 4_000_000;
    for case in 0..5 {
        let g = DMatrix::<f64>::from_fn(4, 6, |_, _| StandardNormal.sample(&mut rng));
        let cov = &g * g.transpose();
        let d = cov.diagonal().map(|v| 1.0 / v.sqrt());
        let corr = DMatrix::from_fn(4, 4, |r, c| cov[(r, c)] * d[r] * d[c]);
        let limits = [0.2, -0.4, 0.8, 0.0];
        let p = mvn_cdf(&limits, &corr, &acc).unwrap();
        let chol = corr.clone().cholesky().unwrap().l();
        let mut hits = 0u64;
        for _ in 0..n_samples {
            let z = nalgebra::DVector::<f64>::from_fn(4, |_, _| StandardNormal.sample(&mut rng));
            let y = &chol * z;
            if (0..4).all(|i| y[i] <= limits[i]) {
                hits += 1;
            }
        }
        let mc = hits as f64 / n_samples as f64;
        let se = (mc * (1.0 - mc) / n_samples as f64).sqrt();
        assert!((p - mc).abs() < 4.0 * se + 1e-5, "case {case}: {p} vs {mc} ± {se}");
    }
}

#[test]
fn solver_matrices_take_the_chain_path() {
    // Seed-independent results show the deterministic integrator was used.
    let p = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 12).unwrap();
    let sigma = covariance_matrix(&p, 0, 12).unwrap();
    let limits: Vec<f64> = (0..12).map(|k| 0.5 + 0.1 * k as f64).collect();
    let a = mvn_cdf(&limits, &sigma, &MvnAccuracy { rng_seed: 1, ..Default::default() }).unwrap();
    let b = mvn_cdf(&limits, &sigma, &MvnAccuracy { rng_seed: 2, ..Default::default() }).unwrap();
    assert_eq!(a, b);
    let m = partial_correlation_matrix(&sigma, 5).unwrap();
    let c = mvn_cdf(&limits[..11], &m, &MvnAccuracy { rng_seed: 3, ..Default::default() }).unwrap();
    let d = mvn_cdf(&limits[..11], &m, &MvnAccuracy { rng_seed: 4, ..Default::default() }).unwrap();
    assert_eq!(c, d);
}

#[test]
fn rejects_invalid_matrices() {
    let acc = MvnAccuracy::default();
    let not_psd = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
    assert!(matches!(mvn_cdf(&[0.0; 3], &not_psd, &acc), Err(Error::NumericDomain(_))));
    let perfect = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert!(matches!(
        partial_correlation_matrix(&perfect, 0),
        Err(Error::SingularConditioning { .. })
    ));
    assert!(mvn_cdf(&[0.0, f64::NAN], &DMatrix::identity(2, 2), &acc).is_err());
}
