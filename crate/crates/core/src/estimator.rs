//! The full node loop: build, tune, solve and rescale every column, then
//! optionally symmetrize.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    build_node_problem, covariate_index, empirical_moments, recover_precision_column,
    DatasetCollection, JointPrecision, Moments, PrecisionColumn,
};
use crate::solver::{solve, tune_s0, S0Selection, SolveTrace, SolverConfig};

/// Result of one node: the selected `s0`, the recovered column and the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEstimate {
    pub node: usize,
    pub s0: f64,
    pub column: PrecisionColumn,
    pub trace: SolveTrace,
}

/// Estimates column `node` of every precision matrix.
pub fn estimate_node(
    collection: &DatasetCollection,
    moments: &Moments,
    node: usize,
    config: &SolverConfig,
) -> Result<NodeEstimate> {
    let run = || -> Result<NodeEstimate> {
        let problem = build_node_problem(collection, moments, node, config.c0)?;
        let (s0, beta, trace) = match config.s0_selection {
            S0Selection::PerNode => tune_s0(&problem, config)?,
            S0Selection::Fixed(s0) => {
                let (beta, trace) = solve(&problem, s0, config)?;
                (s0, beta, trace)
            }
        };
        let column = recover_precision_column(&problem, &beta)?;
        Ok(NodeEstimate {
            node,
            s0,
            column,
            trace,
        })
    };
    run().map_err(|e| Error::Node {
        node,
        source: Box::new(e),
    })
}

/// Runs `f` on a pool of `threads` workers (0 means one per available core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// The unsymmetrized joint estimate together with the per-node traces.
///
/// Columns are computed independently on `threads` workers; the output does
/// not depend on the worker count.
pub fn estimate(
    collection: &DatasetCollection,
    config: &SolverConfig,
    threads: usize,
) -> Result<(JointPrecision, Vec<SolveTrace>)> {
    with_threads(threads, || estimate_in_current_pool(collection, config))?
}

/// [`estimate`] without creating a thread pool; runs on the caller's pool.
pub fn estimate_in_current_pool(
    collection: &DatasetCollection,
    config: &SolverConfig,
) -> Result<(JointPrecision, Vec<SolveTrace>)> {
    let nodes = estimate_nodes(collection, config)?;
    Ok(assemble(collection.k(), collection.p(), nodes))
}

/// Every node's estimate, in node order, on the caller's pool.
pub fn estimate_nodes(
    collection: &DatasetCollection,
    config: &SolverConfig,
) -> Result<Vec<NodeEstimate>> {
    collection.validate()?;
    config.validate(collection.k())?;
    let moments = empirical_moments(collection);
    let results: Vec<Result<NodeEstimate>> = (0..collection.p())
        .into_par_iter()
        .map(|j| estimate_node(collection, &moments, j, config))
        .collect();
    // Report the lowest failing node regardless of scheduling.
    results.into_iter().collect()
}

fn assemble(k: usize, p: usize, nodes: Vec<NodeEstimate>) -> (JointPrecision, Vec<SolveTrace>) {
    let mut matrices = vec![DMatrix::zeros(p, p); k];
    let mut traces = Vec::with_capacity(p);
    for node in nodes {
        let j = node.node;
        for (kk, m) in matrices.iter_mut().enumerate() {
            m[(j, j)] = node.column.diag[kk];
            for (i, v) in node.column.offdiag[kk].iter().enumerate() {
                m[(covariate_index(i, j), j)] = *v;
            }
        }
        traces.push(node.trace);
    }
    let joint = JointPrecision::new(matrices, false).expect("square matrices by construction");
    (joint, traces)
}

/// Minimum symmetrization: each off-diagonal pair takes the value of smaller
/// magnitude. On a magnitude tie the upper-triangle entry wins, which keeps
/// the output exactly symmetric.
pub fn symmetrize(estimate: &JointPrecision) -> JointPrecision {
    let p = estimate.p();
    let matrices = estimate
        .matrices()
        .iter()
        .map(|m| {
            let mut out = m.clone();
            for i in 0..p {
                for j in (i + 1)..p {
                    let (a, b) = (m[(i, j)], m[(j, i)]);
                    let v = if a.abs() <= b.abs() { a } else { b };
                    out[(i, j)] = v;
                    out[(j, i)] = v;
                }
            }
            out
        })
        .collect();
    JointPrecision::new(matrices, true).expect("same shapes as input")
}

/// Estimated neighbor sets read off the columns of a joint estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSets {
    /// `per_graph[k][j]`: sorted neighbors of node `j` in graph `k`.
    pub per_graph: Vec<Vec<Vec<usize>>>,
    /// `union[j]`: sorted neighbors of node `j` in at least one graph.
    pub union: Vec<Vec<usize>>,
}

impl SupportSets {
    pub fn p(&self) -> usize {
        self.union.len()
    }

    /// `|∪_k S_j^(k)|` per node.
    pub fn union_sizes(&self) -> Vec<usize> {
        self.union.iter().map(Vec::len).collect()
    }

    /// `Σ_k |S_j^(k)|` per node.
    pub fn total_sizes(&self) -> Vec<usize> {
        (0..self.p())
            .map(|j| self.per_graph.iter().map(|g| g[j].len()).sum())
            .collect()
    }

    /// Average number of graphs each neighbor of `node` appears in, or `None`
    /// for an isolated node.
    pub fn average_frequency(&self, node: usize) -> Option<f64> {
        let u = self.union[node].len();
        (u > 0).then(|| self.total_sizes()[node] as f64 / u as f64)
    }

    /// Realized neighbor-similarity: the maximum average frequency over
    /// nodes with at least one neighbor (0 when there are no edges).
    pub fn neighbor_similarity(&self) -> f64 {
        (0..self.p())
            .filter_map(|j| self.average_frequency(j))
            .fold(0.0, f64::max)
    }

    /// Realized edge-sparsity: the largest union neighborhood.
    pub fn edge_sparsity(&self) -> usize {
        self.union_sizes().into_iter().max().unwrap_or(0)
    }
}

/// Nonzero off-diagonal pattern of each column: `i ∈ S_j^(k)` iff `Θ_ij^(k) != 0`.
pub fn support_sets(estimate: &JointPrecision) -> SupportSets {
    let p = estimate.p();
    let per_graph: Vec<Vec<Vec<usize>>> = estimate
        .matrices()
        .iter()
        .map(|m| {
            (0..p)
                .map(|j| (0..p).filter(|&i| i != j && m[(i, j)] != 0.0).collect())
                .collect()
        })
        .collect();
    let union = (0..p)
        .map(|j| {
            (0..p)
                .filter(|&i| per_graph.iter().any(|g| g[j].binary_search(&i).is_ok()))
                .collect()
        })
        .collect();
    SupportSets { per_graph, union }
}
