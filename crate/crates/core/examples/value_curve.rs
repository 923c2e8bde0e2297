//! Compare the cost of buying now, x + H_n, with the expected cost of waiting,
//! V^C(x, t_n), at t = 10 of a 15-period horizon. The curves cross once, at
//! the threshold.

use purchase_threshold::solver::{continuation_value, solve_thresholds, threshold_bounds};
use purchase_threshold::{HoldingSchedule, MvnAccuracy, ProcessParams};

fn main() -> purchase_threshold::Result<()> {
    let params = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 15)?;
    let holding = HoldingSchedule::linear_in_remaining(0.01, &params)?;
    let acc = MvnAccuracy::with_abs_tol(1e-8);
    let b = solve_thresholds(&params, &holding, 1e-6, &acc)?;

    let n = 10;
    let bounds = threshold_bounds(&params, &holding, n, b.level(n + 1))?;
    let tail = holding.tail(params.dt, n);
    println!("b(t_{n}) = {:.6}, bracket [{:.4}, {:.4}]", b.level(n), bounds.lower, bounds.upper);
    println!("{:>8} {:>10} {:>10}  region", "x", "buy now", "wait");
    let (lo, hi) = (bounds.lower - params.sigma, bounds.upper + 3.0 * params.sigma);
    for j in 0..=20 {
        let x = lo + (hi - lo) * j as f64 / 20.0;
        let wait = continuation_value(&params, &holding, x, n, b.levels(), &acc)?;
        let region = if x <= b.level(n) { "buy" } else { "wait" };
        println!("{x:>8.4} {:>10.5} {wait:>10.5}  {region}", x + tail);
    }
    Ok(())
}
