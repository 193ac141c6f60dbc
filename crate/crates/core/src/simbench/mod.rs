//! Synthetic benchmark: ground-truth generation, sampling, metrics and the
//! replication harness.
//!
//! A base Erdős–Rényi graph is drawn once per truth; each dataset then drops
//! every base edge independently with probability `rho`, draws the surviving
//! edge values from `[-1, -0.5] ∪ [0.5, 1]` and inflates the diagonal so that
//! the smallest eigenvalue of every precision matrix equals `r`.

mod experiment;
mod metrics;
mod normality;
pub mod rng;
mod truth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SolverConfig;

pub use experiment::{
    run_experiment, run_experiment_in_current_pool, summarize, ExperimentSummary, ExperimentTable,
    MetricSummary, ReplicationRecord,
};
pub use metrics::{mcc, metrics, Metric, MetricReport};
pub use normality::{normality_study, EntryStudy, NormalityReport, StudyEntry};
pub use truth::{generate_truth, sample_data, GroundTruth};

/// One simulation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub p: usize,
    pub k: usize,
    pub n_per_dataset: usize,
    /// Connection probability of the base graph.
    pub edge_prob: f64,
    /// Probability that a dataset drops a base edge.
    pub rho: f64,
    /// Smallest eigenvalue of every true precision matrix.
    pub r: f64,
    pub replications: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    /// Score the symmetrized estimate (otherwise the raw node-wise columns).
    pub symmetrize: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            p: 50,
            k: 10,
            n_per_dataset: 100,
            edge_prob: 0.1,
            rho: 0.5,
            r: 0.1,
            replications: 20,
            seed: 0,
            solver: SolverConfig::default(),
            symmetrize: true,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.p < 2 {
            return fail(format!("p must be at least 2, got {}", self.p));
        }
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if self.n_per_dataset < 2 {
            return fail(format!("n_per_dataset must be at least 2, got {}", self.n_per_dataset));
        }
        if !(self.edge_prob > 0.0 && self.edge_prob < 1.0) {
            return fail(format!("edge_prob must lie in (0, 1), got {}", self.edge_prob));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return fail(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return fail(format!("r must be positive, got {}", self.r));
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        self.solver.validate(self.k)
    }
}
