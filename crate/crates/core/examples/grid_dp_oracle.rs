//! Re-derive the thresholds by backward induction on a price grid and compare
//! them with the closed-form solver.

use purchase_threshold::oracle::{grid_dp_solve, GridSpec, Transition};
use purchase_threshold::solver::solve_thresholds;
use purchase_threshold::{HoldingSchedule, MvnAccuracy, ProcessParams};

fn main() -> purchase_threshold::Result<()> {
    let params = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 10)?;
    let holding = HoldingSchedule::linear_in_remaining(0.01, &params)?;
    let b = solve_thresholds(&params, &holding, 1e-6, &MvnAccuracy::with_abs_tol(1e-8))?;

    let exact = GridSpec::default_for(&params);
    let hermite = GridSpec {
        transition: Transition::GaussHermite(64),
        ..exact
    };
    let grid = grid_dp_solve(&params, &holding, &exact)?;
    let gh = grid_dp_solve(&params, &holding, &hermite)?;
    println!("grid step {:.5}", exact.step());
    println!("{:>3} {:>10} {:>11} {:>11}", "n", "b", "exact - b", "hermite - b");
    for n in 0..params.n_steps {
        println!(
            "{n:>3} {:>10.6} {:>11.2e} {:>11.2e}",
            b.level(n),
            grid.thresholds[n] - b.level(n),
            gh.thresholds[n] - b.level(n)
        );
    }
    Ok(())
}
