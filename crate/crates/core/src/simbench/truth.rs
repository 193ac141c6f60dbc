use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{substream, Purpose};
use super::ExperimentSpec;
use crate::estimator::support_sets;
use crate::model::{symmetric_spectrum, DatasetCollection, JointPrecision};

/// True parameters of one simulated replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Edges `(i, j)` with `i < j` of the base graph.
    pub base_edges: Vec<(usize, usize)>,
    /// Weighted adjacency matrices with zero diagonal.
    pub omega: Vec<DMatrix<f64>>,
    pub theta: Vec<DMatrix<f64>>,
    pub sigma: Vec<DMatrix<f64>>,
    /// Lower Cholesky factors of `sigma`.
    pub factors: Vec<DMatrix<f64>>,
    /// Realized neighbor-similarity.
    pub s0: f64,
    /// Realized edge-sparsity.
    pub s: usize,
}

impl GroundTruth {
    pub fn k(&self) -> usize {
        self.theta.len()
    }

    pub fn p(&self) -> usize {
        self.theta[0].nrows()
    }

    pub fn joint(&self) -> JointPrecision {
        JointPrecision::new(self.theta.clone(), true).expect("square matrices")
    }
}

/// Draws the ground truth of replication `replication` under `spec.seed`.
///
/// # Panics
///
/// If `spec` fails [`ExperimentSpec::validate`].
pub fn generate_truth(spec: &ExperimentSpec, replication: u64) -> GroundTruth {
    spec.validate().expect("valid experiment spec");
    let (p, seed) = (spec.p, spec.seed);

    let mut graph_rng = substream(seed, replication, 0, Purpose::BaseGraph, 0);
    let mut base_edges = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if graph_rng.random::<f64>() < spec.edge_prob {
                base_edges.push((i, j));
            }
        }
    }

    let mut omega = Vec::with_capacity(spec.k);
    let mut theta = Vec::with_capacity(spec.k);
    let mut sigma = Vec::with_capacity(spec.k);
    let mut factors = Vec::with_capacity(spec.k);
    for k in 0..spec.k {
        let mut prune_rng = substream(seed, replication, k as u64, Purpose::Prune, 0);
        let mut value_rng = substream(seed, replication, k as u64, Purpose::EdgeValues, 0);
        let mut w = DMatrix::zeros(p, p);
        for &(i, j) in &base_edges {
            // Both draws happen for every base edge so values do not depend on pruning.
            let dropped = prune_rng.random::<f64>() < spec.rho;
            let magnitude: f64 = value_rng.random_range(0.5..=1.0);
            let negative: bool = value_rng.random();
            if !dropped {
                let v = if negative { -magnitude } else { magnitude };
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        let lambda_min = symmetric_spectrum(&w).expect("finite edge weights").min();
        let shift = spec.r + lambda_min.abs();
        let mut t = w.clone();
        for d in 0..p {
            t[(d, d)] = shift;
        }
        let s = symmetric(t.clone().cholesky().expect("positive definite by construction").inverse());
        let l = s.clone().cholesky().expect("positive definite by construction").l();
        omega.push(w);
        theta.push(t);
        sigma.push(s);
        factors.push(l);
    }

    let joint = JointPrecision::new(theta.clone(), true).expect("square matrices");
    let sets = support_sets(&joint);
    GroundTruth {
        base_edges,
        omega,
        theta,
        sigma,
        factors,
        s0: sets.neighbor_similarity(),
        s: sets.edge_sparsity(),
    }
}

fn symmetric(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for a in 0..m.nrows() {
        for b in 0..a {
            let v = 0.5 * (m[(a, b)] + m[(b, a)]);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    m
}

/// Draws `spec.n_per_dataset` rows `L g` per dataset. Row `ℓ` of dataset `k`
/// depends only on `(spec.seed, replication, k, ℓ)`.
pub fn sample_data(truth: &GroundTruth, spec: &ExperimentSpec, replication: u64) -> DatasetCollection {
    let p = truth.p();
    let n = spec.n_per_dataset;
    let datasets = truth
        .factors
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let mut x = DMatrix::zeros(n, p);
            let mut g = vec![0.0; p];
            for row in 0..n {
                let mut rng = substream(spec.seed, replication, k as u64, Purpose::Observations, row as u64);
                for v in g.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                // Plain dot products so a row never depends on how many rows are drawn.
                for a in 0..p {
                    x[(row, a)] = (0..=a).map(|b| l[(a, b)] * g[b]).sum();
                }
            }
            x
        })
        .collect();
    DatasetCollection::new(datasets).expect("well-formed simulated data")
}
