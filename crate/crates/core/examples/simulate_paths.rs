//! Seeded price paths: identical output for identical seed, whatever the
//! number of threads.

use purchase_threshold::process::simulate_paths;
use purchase_threshold::ProcessParams;

fn main() -> purchase_threshold::Result<()> {
    let params = ProcessParams::new(10.0, 0.5, 1.0, 1.0, 15)?;
    let paths = simulate_paths(&params, 12.0, 0, 20_000, 2024)?;
    for p in 0..3 {
        let row: Vec<String> = paths.path(p).iter().map(|x| format!("{x:.2}")).collect();
        println!("path {p}: {}", row.join(" "));
    }
    let last = paths.n_cols() - 1;
    let mean = paths.column(last).sum::<f64>() / paths.n_paths() as f64;
    let expected = params.theta + (12.0 - params.theta) * params.persistence().powi(15);
    println!("mean at t_15 = {mean:.4} (expected {expected:.4})");
    Ok(())
}
