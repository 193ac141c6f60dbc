use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by estimation, inference and classification.
///
/// Dataset, covariate, node and class indices are 0-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("at least one dataset is required")]
    NoDatasets,
    #[error("dataset {dataset} has {found} columns, expected {expected}")]
    DimensionMismatch {
        dataset: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset {dataset} has {found} observations, need at least {required}")]
    TooFewObservations {
        dataset: usize,
        found: usize,
        required: usize,
    },
    #[error("at least {required} covariates are required, found {found}")]
    TooFewCovariates { found: usize, required: usize },
    #[error("covariate {covariate} of dataset {dataset} has zero second moment")]
    DegenerateCovariate { dataset: usize, covariate: usize },
    #[error("dataset {dataset} contains a non-finite value at row {row}, column {column}")]
    NonFiniteInput {
        dataset: usize,
        row: usize,
        column: usize,
    },
    #[error("node {node} is out of range for {p} covariates")]
    NodeOutOfRange { node: usize, p: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("residual of dataset {dataset} is numerically zero (exact fit)")]
    ExactFit { dataset: usize },
    #[error("iterate became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("solver needs {required} iterations, cap is {cap}")]
    IterationCapExceeded { required: usize, cap: usize },
    #[error("node {node}: {source}")]
    Node { node: usize, source: Box<Error> },
    #[error("replication {replication}: {source}")]
    Replication { replication: u64, source: Box<Error> },
    #[error("support of dataset {dataset}, node {node} is singular (rcond {rcond:.3e})")]
    SingularSubmatrix {
        dataset: usize,
        node: usize,
        rcond: f64,
    },
    #[error("support of dataset {dataset}, node {node} has {size} entries but only {n} observations")]
    SupportTooLarge {
        dataset: usize,
        node: usize,
        size: usize,
        n: usize,
    },
    #[error("class {class} would have an empty train or test part")]
    EmptyClassSplit { class: usize },
    #[error("precision matrix of class {class} has a non-finite log-determinant after repair")]
    NonRepairableMatrix { class: usize },
}

impl Error {
    /// True for errors caused by malformed input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::NoDatasets
            | Error::DimensionMismatch { .. }
            | Error::TooFewObservations { .. }
            | Error::TooFewCovariates { .. }
            | Error::DegenerateCovariate { .. }
            | Error::NonFiniteInput { .. }
            | Error::NodeOutOfRange { .. }
            | Error::InvalidArgument(_)
            | Error::EmptyClassSplit { .. } => true,
            Error::Node { source, .. } | Error::Replication { source, .. } => {
                source.is_input_error()
            }
            _ => false,
        }
    }
}
