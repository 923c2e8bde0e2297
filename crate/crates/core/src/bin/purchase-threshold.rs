use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use purchase_threshold::cli::config::{
    HoldingSection, OutputSection, ProcessSection, SimulationSection, SolverSection,
};
use purchase_threshold::cli::{
    cmd_curves, cmd_simulate, cmd_solve, cmd_value, cmd_verify, exit_code, parse_config,
    OutputFormat, RawConfig, RunConfig, SweepParam, Table, ValueRange, VerifyOptions, EXIT_OK,
    EXIT_VALIDATION, EXIT_VERIFY,
};
use purchase_threshold::Error;

#[derive(Parser)]
#[command(version, about = "Purchase thresholds for a mean-reverting price with holding costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the threshold function.
    Solve(Common),
    /// Threshold curves over a parameter sweep.
    Curves {
        #[command(flatten)]
        common: Common,
        /// theta, sigma, dt_K_scale or holding_scale.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Continuation value against the cost of buying now.
    Value {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        step: usize,
        #[arg(long, requires = "x_max")]
        x_min: Option<f64>,
        #[arg(long, requires = "x_min")]
        x_max: Option<f64>,
        #[arg(long, default_value_t = purchase_threshold::cli::DEFAULT_VALUE_POINTS)]
        points: usize,
    },
    /// Simulate price paths, or crossing statistics with --crossing.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long, default_value_t = 0)]
        start_step: usize,
        #[arg(long)]
        crossing: bool,
    },
    /// Cross-check the solver against Monte Carlo and grid dynamic programming.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x0: Option<f64>,
        /// Debug: shift b(t_STEP) of the tested policy.
        #[arg(long, value_name = "STEP")]
        corrupt_step: Option<usize>,
        #[arg(long, default_value_t = 1.0, requires = "corrupt_step")]
        corrupt_by: f64,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    n_steps: Option<usize>,
    /// Holding rate c*(t_N - t_i).
    #[arg(long)]
    holding_linear: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    holding: Option<Vec<f64>>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let format = self.format.as_deref().map(str::parse::<OutputFormat>).transpose()?;
        let overrides = RawConfig {
            process: ProcessSection {
                theta: self.theta,
                kappa: self.kappa,
                sigma: self.sigma,
                dt: self.dt,
                horizon: self.horizon,
                n_steps: self.n_steps,
            },
            holding: HoldingSection {
                linear_in_remaining: self.holding_linear,
                schedule: self.holding.clone(),
            },
            solver: SolverSection {
                eps: self.eps,
                ..Default::default()
            },
            simulation: SimulationSection {
                n_paths: self.n_paths,
                seed: self.seed,
            },
            output: OutputSection {
                format,
                path: self.out.clone(),
            },
        };
        parse_config(self.config.as_deref(), overrides)
    }
}

fn emit(cfg: &RunConfig, table: &Table) -> Result<(), Error> {
    match &cfg.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(cfg.format, &mut w)?;
            w.flush()?;
        }
        None => table.write(cfg.format, io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Solve(common) => {
            let cfg = common.resolve()?;
            emit(&cfg, &cmd_solve(&cfg)?)?;
        }
        Command::Curves {
            common,
            param,
            values,
        } => {
            let cfg = common.resolve()?;
            let param: SweepParam = param.parse()?;
            emit(&cfg, &cmd_curves(&cfg, param, &values)?)?;
        }
        Command::Value {
            common,
            step,
            x_min,
            x_max,
            points,
        } => {
            let cfg = common.resolve()?;
            let range = ValueRange {
                span: x_min.zip(x_max),
                points,
            };
            emit(&cfg, &cmd_value(&cfg, step, &range)?)?;
        }
        Command::Simulate {
            common,
            x0,
            start_step,
            crossing,
        } => {
            let cfg = common.resolve()?;
            emit(&cfg, &cmd_simulate(&cfg, x0, start_step, crossing)?)?;
        }
        Command::Verify {
            common,
            x0,
            corrupt_step,
            corrupt_by,
        } => {
            let cfg = common.resolve()?;
            let opts = VerifyOptions {
                x0,
                corrupt: corrupt_step.map(|s| (s, corrupt_by)),
            };
            let report = cmd_verify(&cfg, &opts)?;
            emit(&cfg, &report.to_table())?;
            if !report.passed() {
                eprintln!("verification failed");
                return Ok(EXIT_VERIFY);
            }
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
