//! Quadratic discriminant analysis with plug-in class precision matrices.
//!
//! Class `k` scores `δ_k(x) = log π_k + ½ log|Θ_k| - ½ (x - μ_k)ᵀ Θ_k (x - μ_k)`
//! with `π_k = n_k / N` and `μ_k` the class mean; the label is the first
//! maximizer.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{symmetric_spectrum, DatasetCollection, JointPrecision};
use crate::simbench::rng::{substream, Purpose};
use crate::simbench::mcc;

/// Eigenvalues below this fraction of `max(λ_max, 1)` are raised to it before
/// taking the log-determinant.
pub const EIGENVALUE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdaModel {
    pub priors: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub precisions: Vec<DMatrix<f64>>,
    /// Log-determinants after eigenvalue flooring.
    pub log_dets: Vec<f64>,
    /// Number of eigenvalues raised to the floor, per class.
    pub floored_eigenvalues: Vec<usize>,
}

impl QdaModel {
    pub fn k(&self) -> usize {
        self.priors.len()
    }

    pub fn p(&self) -> usize {
        self.means[0].len()
    }

    /// `δ_1(x), ..., δ_K(x)`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.p() {
            return Err(Error::DimensionMismatch {
                dataset: 0,
                expected: self.p(),
                found: x.len(),
            });
        }
        Ok((0..self.k())
            .map(|k| {
                let d = DVector::from_iterator(self.p(), x.iter().zip(self.means[k].iter()).map(|(a, m)| a - m));
                let quad = d.dot(&(&self.precisions[k] * &d));
                self.priors[k].ln() + 0.5 * self.log_dets[k] - 0.5 * quad
            })
            .collect())
    }
}

/// Log-determinant of the symmetric part of `theta` with eigenvalues floored
/// at `EIGENVALUE_FLOOR · max(λ_max, 1)`, and the number of floored values.
/// The log-determinant is NaN if the spectrum cannot be computed.
pub fn repaired_log_det(theta: &DMatrix<f64>) -> (f64, usize) {
    let sym = (theta + theta.transpose()) * 0.5;
    let Some(eig) = symmetric_spectrum(&sym) else {
        return (f64::NAN, 0);
    };
    let floor = EIGENVALUE_FLOOR * eig.max().max(1.0);
    let mut floored = 0;
    let log_det = eig
        .iter()
        .map(|&l| {
            if l < floor {
                floored += 1;
                floor.ln()
            } else {
                l.ln()
            }
        })
        .sum();
    (log_det, floored)
}

/// Fits priors and means on `train` (one dataset per class) and takes the
/// class precision matrices from `estimate`.
pub fn fit_qda(train: &DatasetCollection, estimate: &JointPrecision) -> Result<QdaModel> {
    if estimate.k() != train.k() || estimate.p() != train.p() {
        return Err(Error::InvalidArgument(format!(
            "estimate has K={}, p={} but training data has K={}, p={}",
            estimate.k(),
            estimate.p(),
            train.k(),
            train.p()
        )));
    }
    let total = train.total() as f64;
    let mut model = QdaModel {
        priors: Vec::new(),
        means: Vec::new(),
        precisions: Vec::new(),
        log_dets: Vec::new(),
        floored_eigenvalues: Vec::new(),
    };
    for (k, x) in train.datasets().iter().enumerate() {
        let (log_det, floored) = repaired_log_det(estimate.matrix(k));
        if !log_det.is_finite() {
            return Err(Error::NonRepairableMatrix { class: k });
        }
        model.priors.push(x.nrows() as f64 / total);
        model.means.push(x.row_mean().transpose());
        model.precisions.push(estimate.matrix(k).clone());
        model.log_dets.push(log_det);
        model.floored_eigenvalues.push(floored);
    }
    Ok(model)
}

/// The label (first maximizer of the scores) and all scores.
pub fn classify(model: &QdaModel, x: &[f64]) -> Result<(usize, Vec<f64>)> {
    let scores = model.scores(x)?;
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = k;
        }
    }
    Ok((best, scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: usize,
    /// Row within the class's test matrix.
    pub row: usize,
    pub predicted: usize,
}

/// Classifies every row of every class's test matrix, in class then row order.
pub fn predict(model: &QdaModel, test: &[DMatrix<f64>]) -> Result<Vec<Prediction>> {
    let rows: Vec<(usize, usize)> = test
        .iter()
        .enumerate()
        .flat_map(|(k, x)| (0..x.nrows()).map(move |r| (k, r)))
        .collect();
    rows.par_iter()
        .map(|&(k, r)| {
            let x: Vec<f64> = test[k].row(r).iter().copied().collect();
            let (predicted, _) = classify(model, &x).map_err(|e| match e {
                Error::DimensionMismatch { expected, found, .. } => Error::DimensionMismatch {
                    dataset: k,
                    expected,
                    found,
                },
                other => other,
            })?;
            Ok(Prediction {
                class: k,
                row: r,
                predicted,
            })
        })
        .collect()
}

/// Macro-averaged one-vs-rest scores and overall accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub tpr: f64,
    pub fpr: f64,
    pub accuracy: f64,
    pub mcc: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

pub fn report(k: usize, predictions: &[Prediction]) -> ClassificationReport {
    let mut confusion = vec![vec![0usize; k]; k];
    for p in predictions {
        confusion[p.class][p.predicted] += 1;
    }
    let total: usize = predictions.len();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut tpr, mut fpr, mut m) = (0.0, 0.0, 0.0);
    for c in 0..k {
        let tp = confusion[c][c];
        let fn_ = confusion[c].iter().sum::<usize>() - tp;
        let fp = (0..k).map(|r| confusion[r][c]).sum::<usize>() - tp;
        let tn = total - tp - fn_ - fp;
        tpr += ratio(tp, tp + fn_);
        fpr += ratio(fp, fp + tn);
        m += mcc(tp as u64, fp as u64, tn as u64, fn_ as u64);
    }
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    ClassificationReport {
        tpr: tpr / k as f64,
        fpr: fpr / k as f64,
        accuracy: ratio(correct, total),
        mcc: m / k as f64,
        confusion,
    }
}

pub fn evaluate(model: &QdaModel, test: &[DMatrix<f64>]) -> Result<ClassificationReport> {
    Ok(report(model.k(), &predict(model, test)?))
}

/// How the per-class training count `fraction · n_k` is rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingMode {
    #[default]
    Floor,
    Nearest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<DMatrix<f64>>,
    pub test: Vec<DMatrix<f64>>,
    /// Original row indices (sorted) of each class's training part.
    pub train_rows: Vec<Vec<usize>>,
    pub test_rows: Vec<Vec<usize>>,
}

/// Per class, a seeded shuffle sends the rounded `fraction · n_k` rows to the
/// training part and the rest to the test part.
pub fn stratified_split(
    classes: &[DMatrix<f64>],
    fraction: f64,
    seed: u64,
    rounding: RoundingMode,
) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
        train_rows: Vec::new(),
        test_rows: Vec::new(),
    };
    for (k, x) in classes.iter().enumerate() {
        let n = x.nrows();
        let exact = fraction * n as f64;
        let m = match rounding {
            RoundingMode::Floor => exact.floor(),
            RoundingMode::Nearest => exact.round(),
        } as usize;
        if m == 0 || m >= n {
            return Err(Error::EmptyClassSplit { class: k });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut substream(seed, 0, k as u64, Purpose::Split, 0));
        let mut train_rows = order[..m].to_vec();
        let mut test_rows = order[m..].to_vec();
        train_rows.sort_unstable();
        test_rows.sort_unstable();
        split.train.push(x.select_rows(&train_rows));
        split.test.push(x.select_rows(&test_rows));
        split.train_rows.push(train_rows);
        split.test_rows.push(test_rows);
    }
    Ok(split)
}
