use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::JointPrecision;

/// Estimation and support-recovery scores of one estimate. MCC values are in
/// `[-1, 1]`; tables multiply them by 100 (see [`Metric::tabular`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// `Σ_k (n_k/N) ‖Θ̂^(k) - Θ^(k)‖_F`.
    pub frobenius: f64,
    /// `max_j Σ_k (n_k/N) ‖Θ̂^(k)_{·j} - Θ^(k)_{·j}‖²`.
    pub max_l2: f64,
    /// Pooled over the upper-triangle positions of all `K` graphs.
    pub mcc_edge: f64,
    /// Over the upper-triangle positions of the union graph.
    pub mcc_ngbr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Frobenius,
    MaxL2,
    MccEdge,
    MccNgbr,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Frobenius, Metric::MaxL2, Metric::MccEdge, Metric::MccNgbr];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Frobenius => "frobenius",
            Metric::MaxL2 => "max_l2",
            Metric::MccEdge => "mcc_edge",
            Metric::MccNgbr => "mcc_ngbr",
        }
    }

    /// The value as printed in tables: MCC scaled by 100, errors unchanged.
    pub fn tabular(self, report: &MetricReport) -> f64 {
        match self {
            Metric::Frobenius => report.frobenius,
            Metric::MaxL2 => report.max_l2,
            Metric::MccEdge => 100.0 * report.mcc_edge,
            Metric::MccNgbr => 100.0 * report.mcc_ngbr,
        }
    }
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(tp: u64, fp: u64, tn: u64, fn_: u64) -> f64 {
    let (tp, fp, tn, fn_) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
    let denominator = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    if denominator == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / denominator
    }
}

#[derive(Default)]
struct Confusion {
    tp: u64,
    fp: u64,
    tn: u64,
    fn_: u64,
}

impl Confusion {
    fn add(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    fn mcc(&self) -> f64 {
        mcc(self.tp, self.fp, self.tn, self.fn_)
    }
}

/// Scores `estimate` against the true precision matrices. A pair `(i, j)` is
/// predicted as an edge when either `Θ̂_ij` or `Θ̂_ji` is nonzero.
///
/// `weights` are the dataset proportions `n_k / N`.
pub fn metrics(estimate: &JointPrecision, truth: &[DMatrix<f64>], weights: &[f64]) -> MetricReport {
    let p = estimate.p();
    assert_eq!(estimate.k(), truth.len(), "number of graphs differs");
    assert_eq!(weights.len(), truth.len(), "one weight per graph");

    let mut frobenius = 0.0;
    let mut column_errors = vec![0.0; p];
    let mut edges = Confusion::default();
    let mut union_truth = DMatrix::from_element(p, p, false);
    let mut union_predicted = DMatrix::from_element(p, p, false);
    for ((est, t), w) in estimate.matrices().iter().zip(truth).zip(weights) {
        assert_eq!(t.shape(), (p, p), "truth shape differs from estimate");
        let diff = est - t;
        frobenius += w * diff.norm();
        for (j, err) in column_errors.iter_mut().enumerate() {
            *err += w * diff.column(j).norm_squared();
        }
        for j in 0..p {
            for i in 0..j {
                let is_edge = t[(i, j)] != 0.0;
                let predicted = est[(i, j)] != 0.0 || est[(j, i)] != 0.0;
                edges.add(is_edge, predicted);
                union_truth[(i, j)] |= is_edge;
                union_predicted[(i, j)] |= predicted;
            }
        }
    }
    let mut neighbors = Confusion::default();
    for j in 0..p {
        for i in 0..j {
            neighbors.add(union_truth[(i, j)], union_predicted[(i, j)]);
        }
    }
    MetricReport {
        frobenius,
        max_l2: column_errors.into_iter().fold(0.0, f64::max),
        mcc_edge: edges.mcc(),
        mcc_ngbr: neighbors.mcc(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn joint(ms: Vec<DMatrix<f64>>) -> JointPrecision {
        JointPrecision::new(ms, false).unwrap()
    }

    #[test]
    fn perfect_recovery() {
        let t = DMatrix::from_row_slice(3, 3, &[1., 0.5, 0., 0.5, 1., 0., 0., 0., 1.]);
        let r = metrics(&joint(vec![t.clone(), t.clone()]), &[t.clone(), t], &[0.5, 0.5]);
        assert_eq!(r.frobenius, 0.0);
        assert_eq!(r.max_l2, 0.0);
        assert_eq!(Metric::MccEdge.tabular(&r), 100.0);
        assert_eq!(Metric::MccNgbr.tabular(&r), 100.0);
    }

    #[test]
    fn three_node_confusion() {
        // Truth {(1,2)}; prediction {(1,2), (1,3)}: TP 1, FP 1, TN 1, FN 0.
        let mut t = DMatrix::identity(3, 3);
        t[(0, 1)] = 0.5;
        t[(1, 0)] = 0.5;
        let mut e = t.clone();
        e[(2, 0)] = 0.1;
        let r = metrics(&joint(vec![e]), &[t], &[1.0]);
        assert_relative_eq!(r.mcc_edge, 0.5, max_relative = 1e-15);
        assert_relative_eq!(r.mcc_ngbr, 0.5, max_relative = 1e-15);
        assert_relative_eq!(mcc(1, 1, 1, 0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn empty_prediction_has_zero_mcc() {
        let mut t = DMatrix::identity(3, 3);
        t[(0, 2)] = 0.5;
        t[(2, 0)] = 0.5;
        let r = metrics(&joint(vec![DMatrix::identity(3, 3)]), &[t], &[1.0]);
        assert_eq!(r.mcc_edge, 0.0);
        assert_eq!(r.mcc_ngbr, 0.0);
    }

    /// Literal re-implementation over explicit position lists.
    fn brute(est: &[DMatrix<f64>], truth: &[DMatrix<f64>], w: &[f64]) -> MetricReport {
        let p = truth[0].nrows();
        let mut fro = 0.0;
        for k in 0..truth.len() {
            let mut ss = 0.0;
            for i in 0..p {
                for j in 0..p {
                    ss += (est[k][(i, j)] - truth[k][(i, j)]).powi(2);
                }
            }
            fro += w[k] * ss.sqrt();
        }
        let mut max_l2 = 0.0f64;
        for j in 0..p {
            let mut acc = 0.0;
            for k in 0..truth.len() {
                acc += w[k] * (0..p).map(|i| (est[k][(i, j)] - truth[k][(i, j)]).powi(2)).sum::<f64>();
            }
            max_l2 = max_l2.max(acc);
        }
        let count = |pairs: Vec<(bool, bool)>| {
            let c = |a: bool, b: bool| pairs.iter().filter(|x| **x == (a, b)).count() as u64;
            mcc(c(true, true), c(false, true), c(false, false), c(true, false))
        };
        let mut edge_pairs = vec![];
        let mut union_pairs = vec![];
        for i in 0..p {
            for j in (i + 1)..p {
                let mut ut = false;
                let mut up = false;
                for k in 0..truth.len() {
                    let t = truth[k][(i, j)] != 0.0;
                    let e = est[k][(i, j)] != 0.0 || est[k][(j, i)] != 0.0;
                    edge_pairs.push((t, e));
                    ut |= t;
                    up |= e;
                }
                union_pairs.push((ut, up));
            }
        }
        MetricReport { frobenius: fro, max_l2, mcc_edge: count(edge_pairs), mcc_ngbr: count(union_pairs) }
    }

    fn sparse_matrix() -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(prop_oneof![Just(0.0), -1.0f64..1.0], 16)
            .prop_map(|v| DMatrix::from_vec(4, 4, v))
    }

    proptest! {
        #[test]
        fn matches_brute_force(a in sparse_matrix(), b in sparse_matrix(), c in sparse_matrix(), d in sparse_matrix(), w in 0.1f64..0.9) {
            let truth = [a, b];
            let est = vec![c, d];
            let weights = [w, 1.0 - w];
            let fast = metrics(&joint(est.clone()), &truth, &weights);
            let slow = brute(&est, &truth, &weights);
            prop_assert_eq!(fast.mcc_edge, slow.mcc_edge);
            prop_assert_eq!(fast.mcc_ngbr, slow.mcc_ngbr);
            prop_assert!((fast.frobenius - slow.frobenius).abs() <= 1e-12 * (1.0 + slow.frobenius));
            prop_assert!((fast.max_l2 - slow.max_l2).abs() <= 1e-12 * (1.0 + slow.max_l2));
        }
    }
}
