//! Joint estimation of several Gaussian graphical models that share structure.
//!
//! Each precision-matrix column is recovered from a node-wise regression of
//! one covariate on all the others. Stacking the `K` datasets turns that
//! regression into a multi-task problem with a block-diagonal design, which
//! is solved by iterative hard thresholding with a two-step (edge-wise, then
//! neighbor-wise) thresholding operator. The sparsity-sharing level `s0` is
//! picked per node by an information criterion, so no penalty needs tuning.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: datasets, empirical moments, the scaled node problem and the
//!   rescaling back to precision entries.
//! * [`threshold`]: the two-step hard thresholding operator.
//! * [`solver`]: the two-stage IHT solver and the `s0` tuner.
//! * [`estimator`]: the full node loop, minimum symmetrization and supports.
//! * [`inference`]: plug-in standard errors, z-scores and confidence intervals.
//! * [`simbench`]: synthetic ground truth, sampling, metrics and experiments.
//! * [`qda`]: quadratic discriminant analysis on top of a joint estimate.
//!
//! ```
//! use might::{estimate, symmetrize, SolverConfig};
//! use might::simbench::{generate_truth, sample_data, ExperimentSpec};
//!
//! let spec = ExperimentSpec { p: 10, k: 2, n_per_dataset: 200, ..ExperimentSpec::default() };
//! let truth = generate_truth(&spec, 0);
//! let data = sample_data(&truth, &spec, 0);
//! let (raw, _traces) = estimate(&data, &SolverConfig::default(), 1).unwrap();
//! let theta = symmetrize(&raw);
//! assert_eq!(theta.k(), 2);
//! ```

pub mod error;
pub mod estimator;
pub mod inference;
pub mod model;
pub mod normal;
pub mod qda;
pub mod simbench;
pub mod solver;
pub mod threshold;

pub use error::{Error, Result};
pub use estimator::{estimate, estimate_node, estimate_nodes, support_sets, symmetrize, NodeEstimate, SupportSets};
pub use model::{CoefficientStack, DatasetCollection, JointPrecision, Moments, ScaledDesign};
pub use solver::{S0Selection, SolveTrace, SolverConfig};

// Chapters of the guide under `book/` are compiled as doc-tests so the
// snippets there cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/node-wise.md")]
    mod node_wise {}
    #[doc = include_str!("../../../book/src/thresholding.md")]
    mod thresholding {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/inference.md")]
    mod inference {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/qda.md")]
    mod qda {}
}
