use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, Metric, MetricReport};
use super::truth::{generate_truth, sample_data};
use super::ExperimentSpec;
use crate::error::{Error, Result};
use crate::estimator::{estimate_in_current_pool, symmetrize, with_threads};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: u64,
    pub metrics: MetricReport,
    /// Realized neighbor-similarity and edge-sparsity of the truth.
    pub truth_s0: f64,
    pub truth_s: usize,
    /// Average `s0` picked by the solver over nodes.
    pub mean_selected_s0: f64,
    pub wall_time_secs: f64,
}

/// Mean and standard error of the mean; the error is 0 for a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std_error: f64,
}

/// Per-metric summaries in table units (MCC × 100).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub replications: usize,
    pub frobenius: MetricSummary,
    pub max_l2: MetricSummary,
    pub mcc_edge: MetricSummary,
    pub mcc_ngbr: MetricSummary,
    pub mean_wall_time_secs: f64,
    pub total_wall_time_secs: f64,
}

impl ExperimentSummary {
    pub fn get(&self, metric: Metric) -> MetricSummary {
        match metric {
            Metric::Frobenius => self.frobenius,
            Metric::MaxL2 => self.max_l2,
            Metric::MccEdge => self.mcc_edge,
            Metric::MccNgbr => self.mcc_ngbr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub spec: ExperimentSpec,
    pub records: Vec<ReplicationRecord>,
    pub summary: ExperimentSummary,
}

pub fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    MetricSummary { mean, std_error }
}

fn replicate(spec: &ExperimentSpec, replication: u64) -> Result<ReplicationRecord> {
    let start = Instant::now();
    let truth = generate_truth(spec, replication);
    let data = sample_data(&truth, spec, replication);
    let (raw, traces) = estimate_in_current_pool(&data, &spec.solver)?;
    let scored = if spec.symmetrize { symmetrize(&raw) } else { raw };
    let report = metrics(&scored, &truth.theta, &data.weights());
    Ok(ReplicationRecord {
        replication,
        metrics: report,
        truth_s0: truth.s0,
        truth_s: truth.s,
        mean_selected_s0: traces.iter().map(|t| t.s0).sum::<f64>() / traces.len() as f64,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Runs every replication of `spec` on `threads` workers (0 means one per
/// core). Everything except wall times is independent of the worker count.
pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentTable> {
    with_threads(threads, || run_experiment_in_current_pool(spec))?
}

/// [`run_experiment`] on the caller's thread pool.
pub fn run_experiment_in_current_pool(spec: &ExperimentSpec) -> Result<ExperimentTable> {
    spec.validate()?;
    let start = Instant::now();
    let results: Vec<Result<ReplicationRecord>> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|rep| {
            replicate(spec, rep).map_err(|e| Error::Replication {
                replication: rep,
                source: Box::new(e),
            })
        })
        .collect();
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let column = |m: Metric| -> MetricSummary {
        let values: Vec<f64> = records.iter().map(|r| m.tabular(&r.metrics)).collect();
        summarize(&values)
    };
    let summary = ExperimentSummary {
        replications: records.len(),
        frobenius: column(Metric::Frobenius),
        max_l2: column(Metric::MaxL2),
        mcc_edge: column(Metric::MccEdge),
        mcc_ngbr: column(Metric::MccNgbr),
        mean_wall_time_secs: records.iter().map(|r| r.wall_time_secs).sum::<f64>() / records.len() as f64,
        total_wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(ExperimentTable {
        spec: spec.clone(),
        records,
        summary,
    })
}
