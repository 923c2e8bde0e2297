//! Solve the purchase thresholds for a 15-period horizon and print the
//! bisection bracket and effort at each step.

use purchase_threshold::solver::{default_eps, solve_with_report};
use purchase_threshold::{HoldingSchedule, MvnAccuracy, ProcessParams};

fn main() -> purchase_threshold::Result<()> {
    let params = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 15)?;
    // h(t) = (T - t) / 100
    let holding = HoldingSchedule::linear_in_remaining(0.01, &params)?;
    let eps = default_eps(&params);
    let acc = MvnAccuracy::with_abs_tol(eps / 100.0);

    let report = solve_with_report(&params, &holding, eps, &acc)?;
    println!("{:>3} {:>10} {:>10} {:>10} {:>5}", "n", "b(t_n)", "lower", "upper", "iter");
    for s in &report.steps {
        println!(
            "{:>3} {:>10.6} {:>10.6} {:>10.6} {:>5}",
            s.step, s.threshold, s.lower, s.upper, s.iterations
        );
    }
    println!("{:>3} {:>10}", params.n_steps, "inf");
    Ok(())
}
