//! Threshold curves under parameter sweeps: a shift in the long-run mean
//! shifts the curve by the same amount, and with a zero mean the thresholds
//! scale linearly with volatility.

use purchase_threshold::cli::config::RawConfig;
use purchase_threshold::cli::{cmd_curves, Cell, SweepParam};

const CONFIG: &str = r#"{
    "process": {"theta": 10, "kappa": 0.5, "sigma": 1, "dt": 1, "horizon": 6},
    "holding": {"linear_in_remaining": 0.1},
    "solver": {"eps": 1e-6}
}"#;

fn main() -> purchase_threshold::Result<()> {
    let cfg = RawConfig::from_json(CONFIG)?.resolve()?;
    for (param, values) in [
        (SweepParam::Theta, vec![5.0, 10.0, 20.0]),
        (SweepParam::Sigma, vec![0.5, 1.0, 2.0]),
    ] {
        let table = cmd_curves(&cfg, param, &values)?;
        println!("sweep over {}", param.name());
        let col = |name| table.columns.iter().position(|c| *c == name).unwrap();
        let (v, n, b, shifted) = (col("value"), col("n"), col("b"), col("b_shifted"));
        for row in &table.rows {
            if let (Cell::Float(val), Cell::Int(step), Cell::Float(level), Cell::Float(s)) =
                (&row[v], &row[n], &row[b], &row[shifted])
            {
                println!("  {val:>5} n={step:<2} b={level:>10.5}  shifted={s:>10.5}");
            }
        }
    }
    Ok(())
}
