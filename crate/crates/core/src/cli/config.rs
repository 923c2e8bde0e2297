use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mvn::MvnAccuracy;
use crate::process::{HoldingSchedule, ProcessParams};
use crate::solver::default_eps;

pub const DEFAULT_N_PATHS: usize = 100_000;
pub const DEFAULT_SIM_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!(
                "output.format must be csv or json, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    pub theta: Option<f64>,
    pub kappa: Option<f64>,
    pub sigma: Option<f64>,
    pub dt: Option<f64>,
    /// `T`; must be a whole number of steps.
    pub horizon: Option<f64>,
    pub n_steps: Option<usize>,
}

/// Exactly one of the two representations must be given.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldingSection {
    /// `c` in `h(t_i) = c·(t_N − t_i)`.
    pub linear_in_remaining: Option<f64>,
    /// Explicit `h(t_0), …, h(t_{N−1})`.
    pub schedule: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub eps: Option<f64>,
    pub mvn_abs_tol: Option<f64>,
    pub mvn_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<OutputFormat>,
    pub path: Option<PathBuf>,
}

/// Config file as written, before defaults and validation.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub process: ProcessSection,
    #[serde(default)]
    pub holding: HoldingSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RawConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: RawConfig) -> Self {
        fn pick<T>(slot: &mut Option<T>, new: Option<T>) {
            if new.is_some() {
                *slot = new;
            }
        }
        let p = other.process;
        pick(&mut self.process.theta, p.theta);
        pick(&mut self.process.kappa, p.kappa);
        pick(&mut self.process.sigma, p.sigma);
        pick(&mut self.process.dt, p.dt);
        if p.horizon.is_some() || p.n_steps.is_some() {
            self.process.horizon = p.horizon;
            self.process.n_steps = p.n_steps;
        }
        let h = other.holding;
        if h.linear_in_remaining.is_some() || h.schedule.is_some() {
            self.holding = h;
        }
        pick(&mut self.solver.eps, other.solver.eps);
        pick(&mut self.solver.mvn_abs_tol, other.solver.mvn_abs_tol);
        pick(&mut self.solver.mvn_seed, other.solver.mvn_seed);
        pick(&mut self.simulation.n_paths, other.simulation.n_paths);
        pick(&mut self.simulation.seed, other.simulation.seed);
        pick(&mut self.output.format, other.output.format);
        pick(&mut self.output.path, other.output.path);
        self
    }

    /// Applies defaults and validates every section.
    pub fn resolve(self) -> Result<RunConfig> {
        let p = &self.process;
        let field = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("process.{name} is required")))
        };
        let theta = field(p.theta, "theta")?;
        let kappa = field(p.kappa, "kappa")?;
        let sigma = field(p.sigma, "sigma")?;
        let dt = field(p.dt, "dt")?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("process.dt must be positive, got {dt}")));
        }
        let n_steps = match (p.horizon, p.n_steps) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either process.horizon or process.n_steps, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "process.horizon or process.n_steps is required".into(),
                ))
            }
            (None, Some(n)) => n,
            (Some(t), None) => {
                let steps = t / dt;
                let n = steps.round();
                if !(n >= 1.0) || (steps - n).abs() > 1e-9 * n.max(1.0) {
                    return Err(Error::Config(format!(
                        "process.horizon = {t} is not a positive multiple of dt = {dt}"
                    )));
                }
                n as usize
            }
        };
        let params = ProcessParams::new(theta, kappa, sigma, dt, n_steps).map_err(|e| {
            Error::Config(format!(
                "process: {e} (stationarity needs |1 - dt*K| < 1)"
            ))
        })?;

        let holding_rule = match (&self.holding.linear_in_remaining, &self.holding.schedule) {
            (Some(c), None) => HoldingRule::LinearInRemaining(*c),
            (None, Some(v)) => HoldingRule::Schedule(v.clone()),
            _ => {
                return Err(Error::Config(
                    "holding needs exactly one of linear_in_remaining or schedule".into(),
                ))
            }
        };
        let holding = holding_rule
            .expand(&params)
            .map_err(|e| Error::Config(format!("holding: {e}")))?;

        let eps = self.solver.eps.unwrap_or_else(|| default_eps(&params));
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Config(format!("solver.eps must be positive, got {eps}")));
        }
        let defaults = MvnAccuracy::default();
        let mvn = MvnAccuracy {
            abs_tol: self
                .solver
                .mvn_abs_tol
                .unwrap_or_else(|| defaults.abs_tol.min(eps / 100.0)),
            rng_seed: self.solver.mvn_seed.unwrap_or(defaults.rng_seed),
            ..defaults
        };
        mvn.validate()
            .map_err(|e| Error::Config(format!("solver.mvn_abs_tol: {e}")))?;
        if mvn.abs_tol > eps / 100.0 {
            return Err(Error::Config(format!(
                "solver.mvn_abs_tol = {} must not exceed eps/100 = {}",
                mvn.abs_tol,
                eps / 100.0
            )));
        }

        let n_paths = self.simulation.n_paths.unwrap_or(DEFAULT_N_PATHS);
        if n_paths == 0 {
            return Err(Error::Config("simulation.n_paths must be positive".into()));
        }
        Ok(RunConfig {
            params,
            holding,
            holding_rule,
            eps,
            mvn,
            n_paths,
            sim_seed: self.simulation.seed.unwrap_or(DEFAULT_SIM_SEED),
            format: self.output.format.unwrap_or_default(),
            out: self.output.path,
        })
    }
}

/// How the holding schedule was specified, kept so sweeps can rebuild it.
#[derive(Debug, Clone, PartialEq)]
pub enum HoldingRule {
    LinearInRemaining(f64),
    Schedule(Vec<f64>),
}

impl HoldingRule {
    pub fn expand(&self, params: &ProcessParams) -> Result<HoldingSchedule> {
        match self {
            HoldingRule::LinearInRemaining(c) => HoldingSchedule::linear_in_remaining(*c, params),
            HoldingRule::Schedule(v) => {
                let h = HoldingSchedule::new(v.clone())?;
                if h.len() != params.n_steps {
                    return Err(Error::InvalidArgument(format!(
                        "schedule has {} entries, expected N = {}",
                        h.len(),
                        params.n_steps
                    )));
                }
                Ok(h)
            }
        }
    }
}

/// Validated run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ProcessParams,
    pub holding: HoldingSchedule,
    pub holding_rule: HoldingRule,
    pub eps: f64,
    pub mvn: MvnAccuracy,
    pub n_paths: usize,
    pub sim_seed: u64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

/// Reads `path` (if any), overlays `overrides`, and validates.
pub fn parse_config(path: Option<&Path>, overrides: RawConfig) -> Result<RunConfig> {
    let base = match path {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    base.overlay(overrides).resolve()
}
