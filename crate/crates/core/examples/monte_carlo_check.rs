//! Check the closed-form crossing distribution and the optimal value against
//! seeded Monte Carlo simulation.

use purchase_threshold::crossing::crossing_distribution;
use purchase_threshold::oracle::{mc_crossing_stats, mc_policy_cost, Policy};
use purchase_threshold::solver::{solve_thresholds, value};
use purchase_threshold::{HoldingSchedule, MvnAccuracy, ProcessParams};

fn main() -> purchase_threshold::Result<()> {
    let params = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 8)?;
    let holding = HoldingSchedule::linear_in_remaining(0.01, &params)?;
    let acc = MvnAccuracy::with_abs_tol(1e-8);
    let b = solve_thresholds(&params, &holding, 1e-6, &acc)?;
    let (x0, paths, seed) = (12.0, 200_000, 7);

    let dist = crossing_distribution(&params, x0, 0, b.levels(), &acc)?;
    let mc = mc_crossing_stats(&params, b.levels(), x0, 0, paths, seed)?;
    println!("{:>3} {:>9} {:>9} {:>6}", "i", "P", "P (MC)", "z");
    for (k, est) in mc.iter().enumerate() {
        let z = (est.probability.mean - dist.probs[k]) / est.probability.std_error;
        println!("{:>3} {:>9.5} {:>9.5} {:>6.2}", est.step, dist.probs[k], est.probability.mean, z);
    }

    let v = value(&params, &holding, x0, 0, b.levels(), &acc)?;
    println!("\noptimal value V({x0}, t_0) = {v:.5}");
    for policy in [
        Policy::Threshold(b.clone()),
        Policy::BuyNow,
        Policy::BuyAtDeadline,
        Policy::Threshold(b.shifted(0.25)),
        Policy::Threshold(b.shifted(-0.25)),
    ] {
        let cost = mc_policy_cost(&params, &holding, &policy, x0, 0, paths, seed)?;
        println!("{:<16} {:.5} +/- {:.5}", policy.name(), cost.mean, cost.std_error);
    }
    Ok(())
}
