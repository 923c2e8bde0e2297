use purchase_threshold::oracle::{
    grid_dp_solve, mc_crossing_stats, mc_policy_cost, GridSpec, Policy, Transition,
};
use purchase_threshold::{solve_thresholds, HoldingSchedule, MvnAccuracy, ProcessParams};

fn instance(n: usize) -> (ProcessParams, HoldingSchedule) {
    let p = ProcessParams::new(10.0, 0.5, 1.0, 1.0, n).unwrap();
    let h = HoldingSchedule::linear_in_remaining(0.01, &p).unwrap();
    (p, h)
}

#[test]
fn estimators_are_reproducible() {
    let (p, h) = instance(6);
    let b = solve_thresholds(&p, &h, 1e-6, &MvnAccuracy::default()).unwrap();
    let policy = Policy::Threshold(b.clone());
    let a = mc_policy_cost(&p, &h, &policy, 10.5, 0, 20_000, 7).unwrap();
    let again = mc_policy_cost(&p, &h, &policy, 10.5, 0, 20_000, 7).unwrap();
    assert_eq!(a, again);
    let other = mc_policy_cost(&p, &h, &policy, 10.5, 0, 20_000, 8).unwrap();
    assert_ne!(a.mean, other.mean);
    let c1 = mc_crossing_stats(&p, b.levels(), 10.5, 0, 20_000, 7).unwrap();
    let c2 = mc_crossing_stats(&p, b.levels(), 10.5, 0, 20_000, 7).unwrap();
    assert_eq!(c1, c2);
}

#[test]
fn crossing_frequencies_sum_to_one() {
    let (p, h) = instance(8);
    let b = solve_thresholds(&p, &h, 1e-6, &MvnAccuracy::default()).unwrap();
    let stats = mc_crossing_stats(&p, b.levels(), 11.0, 2, 10_000, 3).unwrap();
    assert_eq!(stats.len(), 6);
    assert_eq!(stats[0].step, 3);
    let total: f64 = stats.iter().map(|s| s.probability.mean).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn simple_policies_have_known_costs() {
    let (p, h) = instance(5);
    let now = mc_policy_cost(&p, &h, &Policy::BuyNow, 11.0, 0, 5_000, 1).unwrap();
    assert_eq!(now.mean, 11.0 + h.tail(p.dt, 0));
    assert_eq!(now.std_error, 0.0);
    // Buying at the deadline costs E[X(t_N)]; no holding is left by then.
    let late = mc_policy_cost(&p, &h, &Policy::BuyAtDeadline, 11.0, 0, 200_000, 1).unwrap();
    let want = 10.0 + 0.5f64.powi(5);
    assert!((late.mean - want).abs() < 4.0 * late.std_error);
    assert!(mc_policy_cost(&p, &h, &Policy::BuyNow, 11.0, 0, 10, 1).is_err());
    assert!(mc_policy_cost(&p, &h, &Policy::BuyNow, 11.0, 6, 5_000, 1).is_err());
}

#[test]
fn grid_matches_solver() {
    let (p, h) = instance(6);
    let b = solve_thresholds(&p, &h, 1e-6, &MvnAccuracy::default()).unwrap();
    let spec = GridSpec::default_for(&p);
    let sol = grid_dp_solve(&p, &h, &spec).unwrap();
    for n in 0..6 {
        assert!((sol.thresholds[n] - b.level(n)).abs() < spec.step().max(1e-3), "step {n}");
    }
    for n in 0..6 {
        for j in (0..sol.nodes.len()).step_by(97) {
            assert!(sol.values[n][j] <= sol.nodes[j] + h.tail(p.dt, n) + 1e-12);
            assert!(sol.values[n][j] <= sol.continuation[n][j] + 1e-12);
        }
    }
}

#[test]
fn quadrature_transition_converges_to_exact() {
    let (p, h) = instance(4);
    let exact = grid_dp_solve(&p, &h, &GridSpec::default_for(&p)).unwrap();
    let spec = GridSpec {
        transition: Transition::GaussHermite(64),
        ..GridSpec::default_for(&p)
    };
    let gh = grid_dp_solve(&p, &h, &spec).unwrap();
    // the last step is linear in V, so quadrature is exact there
    assert!((gh.thresholds[3] - exact.thresholds[3]).abs() < 1e-9);
    for n in 0..3 {
        assert!((gh.thresholds[n] - exact.thresholds[n]).abs() < 2e-2);
        assert!((gh.value_at(n, 10.5) - exact.value_at(n, 10.5)).abs() < 5e-3);
    }
}
