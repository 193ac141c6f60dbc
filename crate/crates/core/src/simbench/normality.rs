use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::truth::{generate_truth, sample_data, GroundTruth};
use super::ExperimentSpec;
use crate::error::{Error, Result};
use crate::estimator::{estimate_in_current_pool, symmetrize, with_threads};
use crate::inference::variance_estimate;
use crate::normal::ks_statistic;

/// How many truth draws are tried before giving up on finding one in which
/// every requested entry is an edge.
const MAX_TRUTH_DRAWS: u64 = 10_000;

/// Entry `Θ_ij^(k)`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyEntry {
    pub k: usize,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryStudy {
    pub entry: StudyEntry,
    pub truth_value: f64,
    /// `sqrt(n_k) (Θ̂_ij - Θ_ij) / σ̂_ij`, one per replication that selected the entry.
    pub samples: Vec<f64>,
    /// Replications in which the entry was estimated as zero.
    pub unselected: usize,
    /// Replications in which the variance could not be estimated.
    pub failed: usize,
    pub mean: Option<f64>,
    pub ks: Option<f64>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    /// Index of the truth draw that was used (see [`normality_study`]).
    pub truth_draw: u64,
    pub truth: GroundTruth,
    pub entries: Vec<EntryStudy>,
}

enum Outcome {
    Selected(f64),
    Unselected,
    Failed,
}

/// Monte-Carlo distribution of the studentized estimates of `entries`.
///
/// One truth is held fixed: the first draw `t = 0, 1, ...` of
/// [`generate_truth`] in which every requested off-diagonal entry is an edge.
/// Each replication then samples fresh data, estimates and studentizes.
pub fn normality_study(
    spec: &ExperimentSpec,
    entries: &[StudyEntry],
    replications: usize,
    threads: usize,
) -> Result<NormalityReport> {
    spec.validate()?;
    for e in entries {
        if e.k >= spec.k || e.i >= spec.p || e.j >= spec.p {
            return Err(Error::InvalidArgument(format!(
                "entry (k={}, i={}, j={}) is outside K={}, p={}",
                e.k, e.i, e.j, spec.k, spec.p
            )));
        }
    }
    let (truth_draw, truth) = (0..MAX_TRUTH_DRAWS)
        .map(|t| (t, generate_truth(spec, t)))
        .find(|(_, truth)| entries.iter().all(|e| truth.theta[e.k][(e.i, e.j)] != 0.0))
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no truth with all requested entries in the support within {MAX_TRUTH_DRAWS} draws"
            ))
        })?;

    let per_rep: Vec<Result<Vec<Outcome>>> = with_threads(threads, || {
        (0..replications as u64)
            .into_par_iter()
            .map(|rep| {
                replicate(spec, &truth, entries, rep).map_err(|e| Error::Replication {
                    replication: rep,
                    source: Box::new(e),
                })
            })
            .collect()
    })?;

    let mut studies: Vec<EntryStudy> = entries
        .iter()
        .map(|&e| EntryStudy {
            entry: e,
            truth_value: truth.theta[e.k][(e.i, e.j)],
            samples: Vec::new(),
            unselected: 0,
            failed: 0,
            mean: None,
            ks: None,
            warning: None,
        })
        .collect();
    for outcomes in per_rep {
        for (study, outcome) in studies.iter_mut().zip(outcomes?) {
            match outcome {
                Outcome::Selected(z) => study.samples.push(z),
                Outcome::Unselected => study.unselected += 1,
                Outcome::Failed => study.failed += 1,
            }
        }
    }
    for study in &mut studies {
        if study.samples.is_empty() {
            study.warning = Some("entry was never selected; sample is empty".into());
        } else {
            study.mean = Some(study.samples.iter().sum::<f64>() / study.samples.len() as f64);
            study.ks = ks_statistic(&study.samples);
        }
    }
    Ok(NormalityReport {
        truth_draw,
        truth,
        entries: studies,
    })
}

fn replicate(
    spec: &ExperimentSpec,
    truth: &GroundTruth,
    entries: &[StudyEntry],
    replication: u64,
) -> Result<Vec<Outcome>> {
    let data = sample_data(truth, spec, replication);
    let (raw, _) = estimate_in_current_pool(&data, &spec.solver)?;
    let est = if spec.symmetrize { symmetrize(&raw) } else { raw };
    Ok(entries
        .iter()
        .map(|e| {
            let value = est.matrix(e.k)[(e.i, e.j)];
            if value == 0.0 {
                return Outcome::Unselected;
            }
            match variance_estimate(&data, &est, e.k, e.j) {
                Ok(vars) => {
                    let v = vars.iter().find(|v| v.i == e.i).expect("selected entry is in the support");
                    let sqrt_n = (data.n(e.k) as f64).sqrt();
                    Outcome::Selected(sqrt_n * (value - truth.theta[e.k][(e.i, e.j)]) / v.variance.sqrt())
                }
                Err(_) => Outcome::Failed,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn ks_harness_accepts_an_exact_normal_oracle() {
        // Θ̂ = Θ + σ N(0,1)/sqrt(n), studentized with the true σ.
        let (theta, sigma, n) = (0.4, 1.7, 400.0f64);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let z: Vec<f64> = (0..300)
            .map(|_| {
                let est = theta + sigma * rng.sample::<f64, _>(StandardNormal) / n.sqrt();
                n.sqrt() * (est - theta) / sigma
            })
            .collect();
        assert!(ks_statistic(&z).unwrap() < 0.08);
    }

    #[test]
    fn truth_contains_the_requested_entries() {
        let spec = ExperimentSpec { p: 10, k: 2, n_per_dataset: 200, ..ExperimentSpec::default() };
        let entries = [StudyEntry { k: 0, i: 1, j: 2 }, StudyEntry { k: 1, i: 4, j: 5 }];
        let report = normality_study(&spec, &entries, 4, 1).unwrap();
        for s in &report.entries {
            assert_ne!(s.truth_value, 0.0);
            assert_eq!(s.samples.len() + s.unselected + s.failed, 4);
        }
        let again = normality_study(&spec, &entries, 4, 2).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn never_selected_entry_gives_an_empty_sample() {
        // A diagonal entry is always estimated; a huge c2/c1 kills every edge.
        let mut spec = ExperimentSpec { p: 6, k: 1, n_per_dataset: 50, edge_prob: 0.9, ..ExperimentSpec::default() };
        spec.solver.c1 = 1e6;
        spec.solver.c3 = 1e6;
        let report = normality_study(&spec, &[StudyEntry { k: 0, i: 0, j: 1 }], 3, 1);
        let report = report.unwrap();
        let s = &report.entries[0];
        assert!(s.samples.is_empty());
        assert_eq!(s.unselected, 3);
        assert!(s.warning.is_some() && s.mean.is_none() && s.ks.is_none());
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        let spec = ExperimentSpec { p: 5, k: 1, ..ExperimentSpec::default() };
        assert!(normality_study(&spec, &[StudyEntry { k: 1, i: 0, j: 1 }], 1, 1).is_err());
    }
}
