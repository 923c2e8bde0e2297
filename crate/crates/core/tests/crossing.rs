use proptest::prelude::*;
use purchase_threshold::crossing::{
    conditional_crossing_probability, crossing_distribution, crossing_probability,
    overshoot_expectation, truncated_survivor_mean,
};
use purchase_threshold::oracle::mc_crossing_stats;
use purchase_threshold::{Error, MvnAccuracy, ProcessParams};

fn levels(n: usize, base: f64, slope: f64) -> Vec<f64> {
    (0..=n)
        .map(|i| if i == n { f64::INFINITY } else { base + slope * i as f64 })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn probabilities_sum_to_one(
        dk in 0.1..0.9f64,
        sigma in 0.3..2.0f64,
        n in 2usize..9,
        x in 8.0..14.0f64,
        base in 8.0..10.0f64,
        slope in 0.0..0.2f64,
    ) {
        let p = ProcessParams::new(10.0, dk, sigma, 1.0, n).unwrap();
        let b = levels(n, base, slope);
        let d = crossing_distribution(&p, x, 0, &b, &MvnAccuracy::default()).unwrap();
        prop_assert!((d.total_probability() - 1.0).abs() < 1e-9);
        prop_assert!(d.probs.iter().all(|&q| (0.0..=1.0 + 1e-12).contains(&q)));
        for w in d.survivals.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        // Before the horizon a crossing price never exceeds the threshold.
        for (k, o) in d.overshoots.iter().enumerate() {
            if let (Some(e), true) = (o, d.probs[k] > 1e-8) {
                let i = k + 1;
                if i < n {
                    prop_assert!(*e <= b[i] + 1e-6, "E_{} = {} above b = {}", i, e, b[i]);
                }
            }
        }
    }

    #[test]
    fn shift_invariance(dk in 0.2..0.8f64, c in -20.0..20.0f64, x in 9.0..12.0f64) {
        let n = 5;
        let acc = MvnAccuracy::default();
        let p = ProcessParams::new(10.0, dk, 1.0, 1.0, n).unwrap();
        let q = ProcessParams { theta: 10.0 + c, ..p };
        let b = levels(n, 9.2, 0.1);
        let bc: Vec<f64> = b.iter().map(|v| v + c).collect();
        let d0 = crossing_distribution(&p, x, 0, &b, &acc).unwrap();
        let d1 = crossing_distribution(&q, x + c, 0, &bc, &acc).unwrap();
        for k in 0..n {
            prop_assert!((d0.probs[k] - d1.probs[k]).abs() < 1e-10);
            if let (Some(e0), Some(e1)) = (d0.overshoots[k], d1.overshoots[k]) {
                prop_assert!((e0 + c - e1).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn single_functions_agree_with_distribution() {
    let n = 6;
    let p = ProcessParams::new(10.0, 0.5, 1.0, 1.0, n).unwrap();
    let acc = MvnAccuracy::default();
    let b = levels(n, 9.5, 0.08);
    let d = crossing_distribution(&p, 11.0, 0, &b, &acc).unwrap();
    let mut before = 1.0;
    for i in 1..=n {
        let k = i - 1;
        let prob = crossing_probability(&p, 11.0, 0, i, &b, &acc).unwrap();
        assert!((prob - d.probs[k]).abs() < 1e-12);
        let cond = conditional_crossing_probability(&p, 11.0, 0, i, &b, &acc).unwrap();
        assert!((cond * before - prob).abs() < 1e-12);
        let e = overshoot_expectation(&p, 11.0, 0, i, &b, &acc).unwrap();
        let want = d.overshoots[k].unwrap();
        assert!((e - want).abs() < 1e-7 * want.abs().max(1.0), "step {i}: {e} vs {want}");
        if i < n {
            let survivor = truncated_survivor_mean(&p, 11.0, 0, i, &b, false, &acc).unwrap();
            assert!(survivor > b[i]);
        }
        before = d.survivals[k];
    }
}

#[test]
fn matches_simulation() {
    let n = 6;
    let p = ProcessParams::new(10.0, 0.5, 1.0, 1.0, n).unwrap();
    let b = levels(n, 9.6, 0.06);
    let d = crossing_distribution(&p, 11.5, 1, &b, &MvnAccuracy::default()).unwrap();
    let mc = mc_crossing_stats(&p, &b, 11.5, 1, 400_000, 9).unwrap();
    for (k, est) in mc.iter().enumerate() {
        let prob = d.probs[k];
        let se = (prob * (1.0 - prob) / 400_000.0).sqrt().max(1.0 / 400_000.0);
        assert!((est.probability.mean - prob).abs() < 4.0 * se, "step {}", est.step);
        if let (Some(o), Some(e)) = (est.overshoot, d.overshoots[k]) {
            if o.n_paths >= 1000 {
                assert!((o.mean - e).abs() < 4.0 * o.std_error + 1e-9, "step {}", est.step);
            }
        }
    }
}

#[test]
fn rejects_bad_requests() {
    let p = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 4).unwrap();
    let acc = MvnAccuracy::default();
    let b = levels(4, 9.5, 0.0);
    assert!(crossing_probability(&p, 10.0, 2, 2, &b, &acc).is_err());
    assert!(crossing_probability(&p, 10.0, 0, 5, &b, &acc).is_err());
    let mut finite_end = b.clone();
    finite_end[4] = 12.0;
    assert!(crossing_distribution(&p, 10.0, 0, &finite_end, &acc).is_err());
    assert!(crossing_distribution(&p, 10.0, 0, &b[..4], &acc).is_err());
    // Nothing crosses before the horizon when the levels sit at -inf.
    let never = vec![f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY];
    assert!(matches!(
        overshoot_expectation(&p, 10.0, 0, 2, &never, &acc),
        Err(Error::DegenerateConditioning { .. })
    ));
    let d = crossing_distribution(&p, 10.0, 0, &never, &acc).unwrap();
    assert_eq!(d.probs[3], 1.0);
}
