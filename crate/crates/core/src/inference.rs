//! Plug-in standard errors, z-scores and confidence intervals for the
//! entries of an estimated precision column.
//!
//! For dataset `k` and node `j`, let `S = Ŝ_j^(k) ∪ {j}` be the support of the
//! estimated column and `Σ_S` the empirical second-moment matrix restricted to
//! `S`. For every `i ∈ S` the variance of `sqrt(n_k) (Θ_ij - Θ*_ij)` is estimated
//! by
//!
//! ```text
//! σ² = (1/n_k) Σ_ℓ [ (Σ_S⁻¹)_{i,·} x_ℓ x_ℓᵀ (Σ_S⁻¹)_{·,j} ]² - Θ_ij²
//! ```
//!
//! where `x_ℓ` is observation `ℓ` restricted to `S`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DatasetCollection, JointPrecision};
use crate::normal::two_sided_critical;

/// Smallest variance estimate that is reported; smaller values are floored.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Supports whose second-moment submatrix has a smaller reciprocal condition
/// number are treated as singular.
pub const MIN_RCOND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryVariance {
    /// Row index `i` of the entry `(i, j)`.
    pub i: usize,
    pub variance: f64,
    /// The raw estimate fell below [`VARIANCE_FLOOR`].
    pub floored: bool,
}

/// Sorted `Ŝ_j^(k) ∪ {j}` of column `j` in matrix `k`.
pub fn column_support(estimate: &JointPrecision, k: usize, j: usize) -> Vec<usize> {
    let m = estimate.matrix(k);
    (0..estimate.p())
        .filter(|&i| i == j || m[(i, j)] != 0.0)
        .collect()
}

/// Variance estimates for every `i` in the support of column `j` of graph `k`.
pub fn variance_estimate(
    collection: &DatasetCollection,
    estimate: &JointPrecision,
    k: usize,
    j: usize,
) -> Result<Vec<EntryVariance>> {
    let support = column_support(estimate, k, j);
    let x = collection.dataset(k);
    let n = x.nrows();
    if support.len() > n {
        return Err(Error::SupportTooLarge {
            dataset: k,
            node: j,
            size: support.len(),
            n,
        });
    }
    let xs = DMatrix::from_fn(n, support.len(), |r, c| x[(r, support[c])]);
    let mut sigma = xs.tr_mul(&xs) / n as f64;
    for a in 0..sigma.nrows() {
        for b in 0..a {
            sigma[(b, a)] = sigma[(a, b)];
        }
    }
    let singular = |rcond: f64| Error::SingularSubmatrix {
        dataset: k,
        node: j,
        rcond,
    };
    let eig = sigma.clone().symmetric_eigenvalues();
    let rcond = eig.min() / eig.max();
    if !(rcond >= MIN_RCOND) {
        return Err(singular(rcond));
    }
    let inverse = sigma.cholesky().ok_or_else(|| singular(rcond))?.inverse();
    let u = &xs * inverse;
    let pos_j = support.binary_search(&j).expect("support contains j");
    let theta = estimate.matrix(k);

    Ok(support
        .iter()
        .enumerate()
        .map(|(a, &i)| {
            let second: f64 = u
                .column(a)
                .iter()
                .zip(u.column(pos_j).iter())
                .map(|(ui, uj)| {
                    let q = ui * uj;
                    q * q
                })
                .sum::<f64>()
                / n as f64;
            let raw = second - theta[(i, j)] * theta[(i, j)];
            let floored = !(raw >= VARIANCE_FLOOR);
            EntryVariance {
                i,
                variance: if floored { VARIANCE_FLOOR } else { raw },
                floored,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceEntry {
    pub k: usize,
    pub j: usize,
    pub i: usize,
    pub estimate: f64,
    /// `σ / sqrt(n_k)`.
    pub std_error: f64,
    pub z_score: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub floored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub level: f64,
    pub hypothesized: f64,
    /// Ordered by dataset, then column `j`, then row `i`.
    pub entries: Vec<InferenceEntry>,
}

impl InferenceResult {
    /// Number of entries whose variance estimate was floored.
    pub fn floored_count(&self) -> usize {
        self.entries.iter().filter(|e| e.floored).count()
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> Option<&InferenceEntry> {
        self.entries
            .iter()
            .find(|e| e.k == k && e.i == i && e.j == j)
    }
}

/// Confidence interval `estimate ± Φ⁻¹(1 - (1 - level)/2) · std_error`.
pub fn confidence_interval(estimate: f64, std_error: f64, level: f64) -> (f64, f64) {
    let half = two_sided_critical(level) * std_error;
    (estimate - half, estimate + half)
}

/// z-scores against `hypothesized` and confidence intervals at `level` for
/// every entry of every column support. Columns are processed on the
/// caller's thread pool.
pub fn z_scores(
    collection: &DatasetCollection,
    estimate: &JointPrecision,
    level: f64,
    hypothesized: f64,
) -> Result<InferenceResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    if estimate.k() != collection.k() || estimate.p() != collection.p() {
        return Err(Error::InvalidArgument(format!(
            "estimate has K={}, p={} but data has K={}, p={}",
            estimate.k(),
            estimate.p(),
            collection.k(),
            collection.p()
        )));
    }
    let columns: Vec<(usize, usize)> = (0..estimate.k())
        .flat_map(|k| (0..estimate.p()).map(move |j| (k, j)))
        .collect();
    let per_column: Vec<Result<Vec<InferenceEntry>>> = columns
        .par_iter()
        .map(|&(k, j)| {
            let sqrt_n = (collection.n(k) as f64).sqrt();
            let m = estimate.matrix(k);
            let vars = variance_estimate(collection, estimate, k, j)?;
            Ok(vars
                .into_iter()
                .map(|v| {
                    let est = m[(v.i, j)];
                    let std_error = v.variance.sqrt() / sqrt_n;
                    let (ci_low, ci_high) = confidence_interval(est, std_error, level);
                    InferenceEntry {
                        k,
                        j,
                        i: v.i,
                        estimate: est,
                        std_error,
                        z_score: (est - hypothesized) / std_error,
                        ci_low,
                        ci_high,
                        floored: v.floored,
                    }
                })
                .collect())
        })
        .collect();
    let mut entries = Vec::new();
    for column in per_column {
        entries.extend(column?);
    }
    Ok(InferenceResult {
        level,
        hypothesized,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn ci_arithmetic() {
        let (lo, hi) = confidence_interval(0.3, 0.1, 0.95);
        assert_relative_eq!(lo, 0.3 - 0.1959963984540054, max_relative = 1e-12);
        assert_relative_eq!(hi, 0.3 + 0.1959963984540054, max_relative = 1e-12);
        assert!((lo - 0.104).abs() < 5e-4 && (hi - 0.496).abs() < 5e-4);
        let (lo99, hi99) = confidence_interval(0.3, 0.1, 0.99);
        assert!(lo99 < lo && hi99 > hi);
        assert_relative_eq!((lo99 + hi99) / 2.0, 0.3, max_relative = 1e-15);
    }

    #[test]
    fn isolated_node_matches_closed_form() {
        let x = gaussian(200, 3, 1);
        let col = DatasetCollection::new(vec![x.clone()]).unwrap();
        let est = JointPrecision::new(vec![DMatrix::from_diagonal_element(3, 3, 1.1)], true).unwrap();
        let v = variance_estimate(&col, &est, 0, 1).unwrap();
        assert_eq!(v.len(), 1);
        let s = x.column(1).norm_squared() / 200.0;
        let want = x.column(1).iter().map(|a| (a * a / (s * s)).powi(2)).sum::<f64>() / 200.0 - 1.1 * 1.1;
        assert_relative_eq!(v[0].variance, want, max_relative = 1e-12);
    }

    #[test]
    fn diagonal_variance_of_white_noise_is_two() {
        let n = 100_000;
        let x = gaussian(n, 2, 2);
        let col = DatasetCollection::new(vec![x.clone()]).unwrap();
        let s = x.column(0).norm_squared() / n as f64;
        let est = JointPrecision::new(vec![DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0 / s, 1.0]))], true).unwrap();
        let v = variance_estimate(&col, &est, 0, 0).unwrap();
        assert!((v[0].variance - 2.0).abs() < 0.1, "σ² = {}", v[0].variance);
    }

    #[test]
    fn duplicated_covariates_are_singular() {
        let mut x = gaussian(50, 3, 3);
        let c0 = x.column(0).into_owned();
        x.set_column(2, &c0);
        let col = DatasetCollection::new(vec![x]).unwrap();
        let mut m = DMatrix::identity(3, 3);
        m[(2, 0)] = 0.3;
        let est = JointPrecision::new(vec![m], false).unwrap();
        assert!(matches!(
            variance_estimate(&col, &est, 0, 0),
            Err(Error::SingularSubmatrix { dataset: 0, node: 0, .. })
        ));
    }

    #[test]
    fn support_larger_than_sample_is_rejected() {
        let x = gaussian(2, 4, 4);
        let col = DatasetCollection::new(vec![x]).unwrap();
        let m = DMatrix::from_element(4, 4, 0.1) + DMatrix::identity(4, 4);
        let est = JointPrecision::new(vec![m], true).unwrap();
        assert!(matches!(
            variance_estimate(&col, &est, 0, 0),
            Err(Error::SupportTooLarge { size: 4, n: 2, .. })
        ));
    }

    #[test]
    fn quadratic_form_is_symmetric_in_i_and_j() {
        let x = gaussian(300, 4, 5);
        let col = DatasetCollection::new(vec![x]).unwrap();
        let mut m = DMatrix::identity(4, 4);
        for (a, b) in [(0, 2), (2, 0), (0, 3), (3, 0), (2, 3), (3, 2)] {
            m[(a, b)] = -0.2;
        }
        let est = JointPrecision::new(vec![m], true).unwrap();
        let v0 = variance_estimate(&col, &est, 0, 0).unwrap();
        let v2 = variance_estimate(&col, &est, 0, 2).unwrap();
        let from0 = v0.iter().find(|e| e.i == 2).unwrap().variance;
        let from2 = v2.iter().find(|e| e.i == 0).unwrap().variance;
        // Same support {0, 2, 3} in both columns.
        assert_relative_eq!(from0, from2, max_relative = 1e-12);
    }

    #[test]
    fn z_scores_are_consistent() {
        let x = gaussian(400, 3, 6);
        let col = DatasetCollection::new(vec![x]).unwrap();
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 0.25;
        m[(1, 0)] = 0.25;
        let est = JointPrecision::new(vec![m], true).unwrap();
        let res = z_scores(&col, &est, 0.9, 0.1).unwrap();
        // Columns 0 and 1 have two entries each, column 2 one.
        assert_eq!(res.entries.len(), 5);
        for e in &res.entries {
            assert!(e.std_error > 0.0 && e.ci_low < e.ci_high);
            assert_relative_eq!(e.z_score, (e.estimate - 0.1) / e.std_error, max_relative = 1e-14);
        }
        assert!(z_scores(&col, &est, 1.0, 0.0).is_err());
        assert!(z_scores(&col, &est, 0.0, 0.0).is_err());
    }

    #[test]
    fn tiny_variances_are_floored_and_counted() {
        // Θ_jj set far above its plug-in second moment drives the raw estimate negative.
        let x = gaussian(100, 2, 7);
        let col = DatasetCollection::new(vec![x]).unwrap();
        let est = JointPrecision::new(vec![DMatrix::from_diagonal_element(2, 2, 100.0)], true).unwrap();
        let res = z_scores(&col, &est, 0.95, 0.0).unwrap();
        assert_eq!(res.floored_count(), 2);
        assert!(res.entries.iter().all(|e| e.std_error == VARIANCE_FLOOR.sqrt() / 10.0));
    }
}
