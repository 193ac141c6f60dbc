//! Datasets, empirical moments and the scaled node-wise regression.
//!
//! For node `j`, the `K` regressions of covariate `j` on the remaining `p - 1`
//! covariates are stacked into one multi-task problem. Every dataset is first
//! column-scaled to `Z^(k) = sqrt(c0 N / n_k) X^(k) Γ^(k)^{-1/2}`, where `Γ^(k)` is
//! the diagonal of the (uncentered) second-moment matrix, so every column of
//! every block has squared norm `c0 N`. The block-diagonal design is never
//! formed: each block only ever meets its own segment of the response.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix, or `None` if they cannot be computed.
///
/// nalgebra's implicit QR occasionally returns NaN for very sparse inputs
/// (mostly zero rows with a few small blocks). Zero rows contribute a zero
/// eigenvalue each, so they are split off before retrying.
pub fn symmetric_spectrum(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    let eig = m.clone().symmetric_eigenvalues();
    if eig.iter().all(|v| v.is_finite()) {
        return Some(eig);
    }
    let keep: Vec<usize> = (0..m.nrows()).filter(|&i| m.row(i).iter().any(|&v| v != 0.0)).collect();
    let sub = m.select_rows(&keep).select_columns(&keep);
    let mut values: Vec<f64> = match sub.clone().symmetric_eigenvalues() {
        e if e.iter().all(|v| v.is_finite()) => e.iter().copied().collect(),
        _ => sub.try_symmetric_eigen(f64::EPSILON, 100_000)?.eigenvalues.iter().copied().collect(),
    };
    values.resize(m.nrows(), 0.0);
    values.iter().all(|v| v.is_finite()).then(|| DVector::from_vec(values))
}

/// Second moments below this are treated as a degenerate covariate.
pub const DEGENERATE_MOMENT: f64 = 1e-12;

/// A residual norm below this fraction of the response norm is an exact fit.
pub const EXACT_FIT_RATIO: f64 = 1e-12;

/// `K` observation matrices (rows are observations) over the same `p` covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetCollection {
    datasets: Vec<DMatrix<f64>>,
    p: usize,
}

impl DatasetCollection {
    /// Checks the shape invariants: `K >= 1`, `p >= 2`, equal column counts,
    /// `n_k >= 2` and finite entries. Covariate variances are checked by
    /// [`DatasetCollection::validate`].
    pub fn new(datasets: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = datasets.first().ok_or(Error::NoDatasets)?;
        let p = first.ncols();
        if p < 2 {
            return Err(Error::TooFewCovariates { found: p, required: 2 });
        }
        for (k, x) in datasets.iter().enumerate() {
            if x.ncols() != p {
                return Err(Error::DimensionMismatch {
                    dataset: k,
                    expected: p,
                    found: x.ncols(),
                });
            }
            if x.nrows() < 2 {
                return Err(Error::TooFewObservations {
                    dataset: k,
                    found: x.nrows(),
                    required: 2,
                });
            }
            for c in 0..p {
                for r in 0..x.nrows() {
                    if !x[(r, c)].is_finite() {
                        return Err(Error::NonFiniteInput {
                            dataset: k,
                            row: r,
                            column: c,
                        });
                    }
                }
            }
        }
        Ok(Self { datasets, p })
    }

    /// Full validation: shape invariants plus no covariate with zero sample
    /// variance or zero second moment in any dataset.
    pub fn validate(&self) -> Result<()> {
        for (k, x) in self.datasets.iter().enumerate() {
            let n = x.nrows() as f64;
            for c in 0..self.p {
                let col = x.column(c);
                let mean = col.sum() / n;
                let second = col.norm_squared() / n;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                if second < DEGENERATE_MOMENT || var <= DEGENERATE_MOMENT * second {
                    return Err(Error::DegenerateCovariate {
                        dataset: k,
                        covariate: c,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.datasets.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self, k: usize) -> usize {
        self.datasets[k].nrows()
    }

    pub fn ns(&self) -> Vec<usize> {
        self.datasets.iter().map(|x| x.nrows()).collect()
    }

    /// Total observation count `N`.
    pub fn total(&self) -> usize {
        self.datasets.iter().map(|x| x.nrows()).sum()
    }

    pub fn dataset(&self, k: usize) -> &DMatrix<f64> {
        &self.datasets[k]
    }

    pub fn datasets(&self) -> &[DMatrix<f64>] {
        &self.datasets
    }

    pub fn into_datasets(self) -> Vec<DMatrix<f64>> {
        self.datasets
    }

    /// Weights `n_k / N`.
    pub fn weights(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.datasets.iter().map(|x| x.nrows() as f64 / total).collect()
    }

    /// Copy with every column of every dataset shifted to mean zero.
    pub fn centered(&self) -> Self {
        let datasets = self
            .datasets
            .iter()
            .map(|x| {
                let mut x = x.clone();
                let n = x.nrows() as f64;
                for mut col in x.column_iter_mut() {
                    let mean = col.sum() / n;
                    col.add_scalar_mut(-mean);
                }
                x
            })
            .collect();
        Self {
            datasets,
            p: self.p,
        }
    }

    /// Same datasets with the covariates reordered: new column `c` is old
    /// column `perm[c]`.
    pub fn permute_covariates(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.p, "permutation length must equal p");
        let datasets = self
            .datasets
            .iter()
            .map(|x| DMatrix::from_fn(x.nrows(), self.p, |r, c| x[(r, perm[c])]))
            .collect();
        Self {
            datasets,
            p: self.p,
        }
    }
}

/// Per-dataset uncentered second-moment matrices and their diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub sigma: Vec<DMatrix<f64>>,
    pub gamma: Vec<DVector<f64>>,
}

/// `Σ^(k) = X^(k)ᵀ X^(k) / n_k` and `Γ^(k) = diag(Σ^(k))`.
///
/// The moments are uncentered; call [`DatasetCollection::centered`] first
/// for data with nonzero means.
pub fn empirical_moments(collection: &DatasetCollection) -> Moments {
    let mut sigma = Vec::with_capacity(collection.k());
    let mut gamma = Vec::with_capacity(collection.k());
    for x in collection.datasets() {
        let n = x.nrows() as f64;
        let mut s = x.tr_mul(x);
        s /= n;
        // tr_mul is not guaranteed to be bitwise symmetric.
        for a in 0..s.nrows() {
            for b in 0..a {
                s[(b, a)] = s[(a, b)];
            }
        }
        gamma.push(s.diagonal());
        sigma.push(s);
    }
    Moments { sigma, gamma }
}

/// Index in the reduced `(p - 1)`-vector for covariate `c != node`.
#[inline]
pub fn reduced_index(c: usize, node: usize) -> usize {
    if c < node {
        c
    } else {
        c - 1
    }
}

/// Covariate index of reduced index `i` for `node`.
#[inline]
pub fn covariate_index(i: usize, node: usize) -> usize {
    if i < node {
        i
    } else {
        i + 1
    }
}

/// The scaled multi-task regression `X_j = Z_{\j} β + ε` for one node.
///
/// Besides the scaled blocks, the problem carries the per-block Gram matrices
/// `Z^(k)ᵀ Z^(k) / N` and correlations `Z^(k)ᵀ X_j^(k) / N`, both read off the
/// moments, so a gradient step costs `O(K p |support|)` instead of `O(N p)`.
#[derive(Debug, Clone)]
pub struct ScaledDesign {
    node: usize,
    c0: f64,
    ns: Vec<usize>,
    offsets: Vec<usize>,
    blocks: Vec<DMatrix<f64>>,
    response: DVector<f64>,
    scale_factors: Vec<DVector<f64>>,
    gram: Vec<DMatrix<f64>>,
    cross: Vec<DVector<f64>>,
}

/// Builds the scaled node problem for `node` with scaling constant `c0`.
pub fn build_node_problem(
    collection: &DatasetCollection,
    moments: &Moments,
    node: usize,
    c0: f64,
) -> Result<ScaledDesign> {
    let p = collection.p();
    if node >= p {
        return Err(Error::NodeOutOfRange { node, p });
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::InvalidArgument(format!("c0 must be positive, got {c0}")));
    }
    let k_count = collection.k();
    let total = collection.total() as f64;
    let m = p - 1;

    let mut ns = Vec::with_capacity(k_count);
    let mut offsets = Vec::with_capacity(k_count);
    let mut blocks = Vec::with_capacity(k_count);
    let mut gram = Vec::with_capacity(k_count);
    let mut cross = Vec::with_capacity(k_count);
    let mut response = DVector::zeros(collection.total());
    let mut offset = 0;

    for k in 0..k_count {
        let x = collection.dataset(k);
        let n_k = x.nrows();
        let gamma = &moments.gamma[k];
        let sigma = &moments.sigma[k];
        if let Some(c) = gamma.iter().position(|&g| !(g >= DEGENERATE_MOMENT)) {
            return Err(Error::DegenerateCovariate {
                dataset: k,
                covariate: c,
            });
        }
        let inv_sqrt: DVector<f64> = gamma.map(|g| 1.0 / g.sqrt());
        let row_scale = (c0 * total / n_k as f64).sqrt();

        let block = DMatrix::from_fn(n_k, m, |r, i| {
            let c = covariate_index(i, node);
            row_scale * x[(r, c)] * inv_sqrt[c]
        });
        let g = DMatrix::from_fn(m, m, |a, b| {
            let (ca, cb) = (covariate_index(a, node), covariate_index(b, node));
            if ca == cb {
                c0
            } else {
                c0 * sigma[(ca, cb)] * inv_sqrt[ca] * inv_sqrt[cb]
            }
        });
        let corr_scale = (c0 * n_k as f64 / total).sqrt();
        let xc = DVector::from_fn(m, |i, _| {
            let c = covariate_index(i, node);
            corr_scale * sigma[(c, node)] * inv_sqrt[c]
        });
        response
            .rows_mut(offset, n_k)
            .copy_from(&x.column(node));

        ns.push(n_k);
        offsets.push(offset);
        blocks.push(block);
        gram.push(g);
        cross.push(xc);
        offset += n_k;
    }

    Ok(ScaledDesign {
        node,
        c0,
        ns,
        offsets,
        blocks,
        response,
        scale_factors: moments.gamma.clone(),
        gram,
        cross,
    })
}

impl ScaledDesign {
    pub fn node(&self) -> usize {
        self.node
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn k(&self) -> usize {
        self.ns.len()
    }

    /// Number of covariates `p`.
    pub fn p(&self) -> usize {
        self.scale_factors[0].len()
    }

    /// Length of each coefficient subvector, `p - 1`.
    pub fn dim(&self) -> usize {
        self.p() - 1
    }

    pub fn n(&self, k: usize) -> usize {
        self.ns[k]
    }

    pub fn total(&self) -> usize {
        self.response.len()
    }

    /// Scaled design block `Z^(k)` with the node's column removed.
    pub fn block(&self, k: usize) -> &DMatrix<f64> {
        &self.blocks[k]
    }

    /// The stacked response `X_j` of length `N`.
    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn response_segment(&self, k: usize) -> nalgebra::DVectorView<'_, f64> {
        self.response.rows(self.offsets[k], self.ns[k])
    }

    /// Diagonal of `Γ^(k)` over all `p` covariates.
    pub fn scale_factors(&self, k: usize) -> &DVector<f64> {
        &self.scale_factors[k]
    }

    /// `Z^(k)ᵀ Z^(k) / N`.
    pub fn gram(&self, k: usize) -> &DMatrix<f64> {
        &self.gram[k]
    }

    /// `Z^(k)ᵀ X_j^(k) / N`.
    pub fn cross(&self, k: usize) -> &DVector<f64> {
        &self.cross[k]
    }

    /// `‖X_j‖² / N` over all datasets.
    pub fn response_mean_square(&self) -> f64 {
        self.response.norm_squared() / self.total() as f64
    }

    /// Residual `X_j^(k) - Z^(k) β^(k)` computed from the data.
    pub fn residual(&self, k: usize, beta: &DVector<f64>) -> DVector<f64> {
        let mut r = self.response_segment(k).into_owned();
        let block = &self.blocks[k];
        for (i, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                r.axpy(-b, &block.column(i), 1.0);
            }
        }
        r
    }

    /// Per-dataset residual squared norms.
    pub fn residual_sq_norms(&self, beta: &CoefficientStack) -> Vec<f64> {
        (0..self.k())
            .map(|k| self.residual(k, beta.sub(k)).norm_squared())
            .collect()
    }
}

/// Coefficients of one node problem: `K` aligned subvectors of length `p - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientStack {
    sub: Vec<DVector<f64>>,
    node: usize,
}

impl CoefficientStack {
    pub fn zeros(k: usize, dim: usize, node: usize) -> Self {
        Self {
            sub: vec![DVector::zeros(dim); k],
            node,
        }
    }

    /// Panics if the subvectors have different lengths.
    pub fn from_subvectors(sub: Vec<DVector<f64>>, node: usize) -> Self {
        if let Some(first) = sub.first() {
            assert!(
                sub.iter().all(|v| v.len() == first.len()),
                "coefficient subvectors must have equal length"
            );
        }
        Self { sub, node }
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn k(&self) -> usize {
        self.sub.len()
    }

    /// Length of each subvector.
    pub fn dim(&self) -> usize {
        self.sub.first().map_or(0, |v| v.len())
    }

    pub fn sub(&self, k: usize) -> &DVector<f64> {
        &self.sub[k]
    }

    pub fn sub_mut(&mut self, k: usize) -> &mut DVector<f64> {
        &mut self.sub[k]
    }

    pub fn subvectors(&self) -> &[DVector<f64>] {
        &self.sub
    }

    /// The group of edge index `i`: `(β_i^(1), ..., β_i^(K))`.
    pub fn group(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.sub.iter().map(move |v| v[i])
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.sub[k][i]
    }

    pub fn set(&mut self, k: usize, i: usize, value: f64) {
        self.sub[k][i] = value;
    }

    /// Sorted nonzero indices of subvector `k`.
    pub fn support(&self, k: usize) -> Vec<usize> {
        self.sub[k]
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Edge indices that are nonzero in at least one subvector.
    pub fn union_support(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.group(i).any(|v| v != 0.0))
            .collect()
    }

    /// Total nonzero count over all subvectors.
    pub fn total_support(&self) -> usize {
        self.sub
            .iter()
            .map(|v| v.iter().filter(|x| **x != 0.0).count())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.sub.iter().all(|v| v.iter().all(|x| *x == 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.sub.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Same nonzero pattern in every subvector.
    pub fn same_support(&self, other: &Self) -> bool {
        self.sub.len() == other.sub.len()
            && self
                .sub
                .iter()
                .zip(&other.sub)
                .all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| (*x != 0.0) == (*y != 0.0)))
    }
}

/// `K` estimated `p × p` precision matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPrecision {
    matrices: Vec<DMatrix<f64>>,
    symmetrized: bool,
}

impl JointPrecision {
    pub fn new(matrices: Vec<DMatrix<f64>>, symmetrized: bool) -> Result<Self> {
        let first = matrices.first().ok_or(Error::NoDatasets)?;
        let p = first.nrows();
        for (k, m) in matrices.iter().enumerate() {
            if m.nrows() != p || m.ncols() != p {
                return Err(Error::DimensionMismatch {
                    dataset: k,
                    expected: p,
                    found: m.ncols(),
                });
            }
        }
        Ok(Self {
            matrices,
            symmetrized,
        })
    }

    pub fn k(&self) -> usize {
        self.matrices.len()
    }

    pub fn p(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.matrices[k]
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn into_matrices(self) -> Vec<DMatrix<f64>> {
        self.matrices
    }

    pub fn is_symmetrized(&self) -> bool {
        self.symmetrized
    }

    /// Undo [`DatasetCollection::permute_covariates`] with the same `perm`.
    pub fn unpermute(&self, perm: &[usize]) -> Self {
        let p = self.p();
        let matrices = self
            .matrices
            .iter()
            .map(|m| {
                let mut out = DMatrix::zeros(p, p);
                for a in 0..p {
                    for b in 0..p {
                        out[(perm[a], perm[b])] = m[(a, b)];
                    }
                }
                out
            })
            .collect();
        Self {
            matrices,
            symmetrized: self.symmetrized,
        }
    }
}

/// Column `j` of every precision matrix, as recovered from one node problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionColumn {
    /// `Θ_jj^(k)` per dataset.
    pub diag: Vec<f64>,
    /// `Θ_{\j,j}^(k)` per dataset, indexed like the coefficient subvectors.
    pub offdiag: Vec<DVector<f64>>,
}

/// Rescales a coefficient stack back to precision-matrix entries:
/// `Θ_jj = n_k / ‖X_j^(k) - Z^(k) β^(k)‖²` and
/// `Θ_{\j,j} = -sqrt(c0 N / n_k) Θ_jj Γ_{\j}^{-1/2} β^(k)`.
pub fn recover_precision_column(
    problem: &ScaledDesign,
    beta: &CoefficientStack,
) -> Result<PrecisionColumn> {
    let node = problem.node();
    let total = problem.total() as f64;
    let mut diag = Vec::with_capacity(problem.k());
    let mut offdiag = Vec::with_capacity(problem.k());
    for k in 0..problem.k() {
        let n_k = problem.n(k) as f64;
        let residual = problem.residual(k, beta.sub(k)).norm();
        let response = problem.response_segment(k).norm();
        if !(residual >= EXACT_FIT_RATIO * response) || residual == 0.0 {
            return Err(Error::ExactFit { dataset: k });
        }
        let theta_jj = n_k / (residual * residual);
        let scale = -(problem.c0() * total / n_k).sqrt() * theta_jj;
        let gamma = problem.scale_factors(k);
        let column = DVector::from_fn(problem.dim(), |i, _| {
            let b = beta.get(k, i);
            if b == 0.0 {
                0.0
            } else {
                scale * b / gamma[covariate_index(i, node)].sqrt()
            }
        });
        diag.push(theta_jj);
        offdiag.push(column);
    }
    Ok(PrecisionColumn { diag, offdiag })
}
