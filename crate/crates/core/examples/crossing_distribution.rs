//! Distribution of the first step at which the price falls to a threshold,
//! and the expected price at that step.

use purchase_threshold::crossing::{crossing_distribution, overshoot_expectation};
use purchase_threshold::{MvnAccuracy, ProcessParams};

fn main() -> purchase_threshold::Result<()> {
    let params = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 8)?;
    let thresholds = [9.0, 9.1, 9.2, 9.3, 9.4, 9.5, 9.7, 9.9, f64::INFINITY];
    let acc = MvnAccuracy::default();
    let x = 12.0;

    let dist = crossing_distribution(&params, x, 0, &thresholds, &acc)?;
    println!("from x = {x} at t_0");
    println!("{:>3} {:>10} {:>10} {:>10}", "i", "P(tau=i)", "P(tau>i)", "E[X|tau=i]");
    for (k, i) in dist.steps().enumerate() {
        let e = dist.overshoots[k].map_or("-".into(), |e| format!("{e:.5}"));
        println!(
            "{:>3} {:>10.6} {:>10.6} {:>10}",
            i, dist.probs[k], dist.survivals[k], e
        );
    }
    println!("sum of probabilities = {:.12}", dist.total_probability());
    println!("E[X(tau)]            = {:.6}", dist.expected_crossing_price());

    // The same conditional mean through the total-expectation identity.
    let e3 = overshoot_expectation(&params, x, 0, 3, &thresholds, &acc)?;
    println!("E[X | tau = 3] by the identity = {e3:.6}");
    Ok(())
}
