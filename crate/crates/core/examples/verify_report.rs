//! Run the cross-engine verification suite and print it as CSV.

use purchase_threshold::cli::config::RawConfig;
use purchase_threshold::cli::{cmd_verify, OutputFormat, VerifyOptions};

const CONFIG: &str = r#"{
    "process": {"theta": 10, "kappa": 0.5, "sigma": 1, "dt": 1, "horizon": 10},
    "holding": {"linear_in_remaining": 0.01},
    "solver": {"eps": 1e-6},
    "simulation": {"n_paths": 50000, "seed": 42}
}"#;

fn main() -> purchase_threshold::Result<()> {
    let cfg = RawConfig::from_json(CONFIG)?.resolve()?;
    let report = cmd_verify(&cfg, &VerifyOptions::default())?;
    print!("{}", report.to_table().to_string(OutputFormat::Csv)?);
    println!("all checks passed: {}", report.passed());
    Ok(())
}
