//! Solver and experiment configuration: a JSON file, then flag overrides.
//!
//! A solver config file holds any subset of the `SolverConfig` fields, for
//! example `{"c1": 0.3, "s0_grid": [1, 2, 4]}`; missing fields keep their
//! defaults and unknown fields are rejected. An experiment spec file holds
//! any subset of the `ExperimentSpec` fields, with the solver constants
//! nested under `"solver"`.

use std::path::{Path, PathBuf};

use clap::Args;
use might::simbench::ExperimentSpec;
use might::{S0Selection, SolverConfig};

use crate::error::{CliError, CliResult};
use crate::io::read_json;

#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    /// JSON file with solver constants.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Decay factor of the dynamic threshold.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub c3: Option<f64>,
    #[arg(long)]
    pub c4: Option<f64>,
    /// Penalty constant of the information criterion.
    #[arg(long = "c-ic")]
    pub c_ic: Option<f64>,
    /// Use one shared s0 for every node instead of per-node tuning.
    #[arg(long, value_name = "S0")]
    pub fixed_s0: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

impl SolverArgs {
    /// Layers the flags over `base`.
    pub fn apply(&self, mut config: SolverConfig) -> SolverConfig {
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut config.kappa, self.kappa);
        set(&mut config.c0, self.c0);
        set(&mut config.c1, self.c1);
        set(&mut config.c2, self.c2);
        set(&mut config.c3, self.c3);
        set(&mut config.c4, self.c4);
        set(&mut config.c_ic, self.c_ic);
        if let Some(s0) = self.fixed_s0 {
            config.s0_selection = S0Selection::Fixed(s0);
        }
        if let Some(cap) = self.max_iters {
            config.max_total_iters = cap;
        }
        config
    }

    /// The config file (or defaults) with the flags applied.
    pub fn resolve(&self) -> CliResult<SolverConfig> {
        let base = match &self.config {
            Some(path) => read_json(path)?,
            None => SolverConfig::default(),
        };
        Ok(self.apply(base))
    }

    /// Checks the resolved config against `k` datasets.
    pub fn resolve_for(&self, k: usize) -> CliResult<SolverConfig> {
        let config = self.resolve()?;
        config.validate(k).map_err(|e| CliError::input(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// JSON experiment spec; omitted fields take their defaults.
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Score the unsymmetrized estimate.
    #[arg(long)]
    pub no_symmetrize: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

impl SpecArgs {
    pub fn resolve(&self) -> CliResult<ExperimentSpec> {
        let mut spec: ExperimentSpec = match &self.spec {
            Some(path) => read_json(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(path) = &self.solver.config {
            spec.solver = read_json(path)?;
        }
        spec.solver = self.solver.apply(spec.solver);
        if let Some(r) = self.replications {
            spec.replications = r;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if self.no_symmetrize {
            spec.symmetrize = false;
        }
        spec.validate().map_err(|e| CliError::input(spec_message(self.spec.as_deref(), &e)))?;
        spec.solver
            .validate(spec.k)
            .map_err(|e| CliError::input(spec_message(self.spec.as_deref(), &e)))?;
        Ok(spec)
    }
}

fn spec_message(path: Option<&Path>, e: &might::Error) -> String {
    match path {
        Some(p) => format!("{}: {e}", p.display()),
        None => e.to_string(),
    }
}
