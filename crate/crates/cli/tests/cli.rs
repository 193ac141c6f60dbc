use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use might::inference::z_scores;
use might::qda::{fit_qda, predict, stratified_split, RoundingMode};
use might::{DatasetCollection, SolverConfig};
use might_cli::commands::{fit_class_precisions, read_estimate, Method};
use might_cli::io::{default_names, read_table, write_table};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn might(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_might"))
        .args(args)
        .env_remove("MIGHT_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = might(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_spec(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("spec.json");
    fs::write(&path, json).unwrap();
    path
}

/// Simulates two small datasets into `dir/sim` and returns their paths.
fn simulated(dir: &Path) -> (PathBuf, PathBuf) {
    let spec = write_spec(dir, r#"{"p": 8, "k": 2, "n_per_dataset": 150, "seed": 3}"#);
    let sim = dir.join("sim");
    ok(&["simulate", "--spec", s(&spec), "--out", s(&sim)]);
    (sim.join("data_1.csv"), sim.join("data_2.csv"))
}

fn gaussian(n: usize, p: usize, seed: u64, shift: f64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, p, |_, _| shift + rng.sample::<f64, _>(StandardNormal))
}

#[test]
fn estimate_writes_matrices_supports_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = simulated(dir.path());
    let out = dir.path().join("est");
    ok(&["estimate", "--data", s(&d1), "--data", s(&d2), "--out", s(&out), "--c1", "0.3"]);
    for f in ["theta_1.csv", "theta_2.csv", "supports.json", "trace.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let theta = read_table(&out.join("theta_1.csv")).unwrap().matrix;
    assert_eq!(theta, theta.transpose());
    let trace: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    assert_eq!(trace["config"]["c1"], 0.3);
    assert_eq!(trace["config"]["c0"], SolverConfig::default().c0);
    assert_eq!(trace["symmetrize"], true);
    assert_eq!(trace["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(trace["nodes"].as_array().unwrap().len(), 8);
}

#[test]
fn no_symmetrize_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = simulated(dir.path());
    let out = dir.path().join("raw");
    ok(&["estimate", "--data", s(&d1), "--data", s(&d2), "--out", s(&out), "--no-symmetrize"]);
    let trace: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    assert_eq!(trace["symmetrize"], false);
    let theta = read_table(&out.join("theta_1.csv")).unwrap().matrix;
    assert_ne!(theta, theta.transpose());
}

#[test]
fn input_errors_exit_with_two_and_name_the_culprit() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = might(&["estimate", "--data", s(&missing), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.csv"));

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_table(&a, &default_names(3), &gaussian(20, 3, 1, 0.0)).unwrap();
    write_table(&b, &default_names(4), &gaussian(20, 4, 2, 0.0)).unwrap();
    let out = might(&["estimate", "--data", s(&a), "--data", s(&b), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("b.csv"));

    let mut x = gaussian(20, 3, 3, 0.0);
    x.column_mut(1).fill(4.0);
    let names = vec!["alpha".to_string(), "beta".to_string(), "gamma".to_string()];
    write_table(&a, &names, &x).unwrap();
    let out = might(&["estimate", "--data", s(&a), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("'beta'"), "{}", stderr(&out));
}

#[test]
fn infer_on_a_written_estimate_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = simulated(dir.path());
    let est = dir.path().join("raw");
    let csv = dir.path().join("ci.csv");
    ok(&["estimate", "--data", s(&d1), "--data", s(&d2), "--out", s(&est), "--no-symmetrize"]);
    ok(&["infer", "--data", s(&d1), "--data", s(&d2), "--estimate", s(&est), "--out", s(&csv), "--level", "0.9"]);

    let data = DatasetCollection::new(vec![read_table(&d1).unwrap().matrix, read_table(&d2).unwrap().matrix])
        .unwrap()
        .centered();
    let fitted = read_estimate(&est, 2, 8).unwrap();
    let expected = z_scores(&data, &fitted, 0.9, 0.0).unwrap();
    let off: Vec<_> = expected.entries.iter().filter(|e| e.i != e.j).collect();

    let mut reader = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["k", "j", "i", "estimate", "std_error", "z", "ci_low", "ci_high"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), off.len());
    assert!(!rows.is_empty());
    for (row, e) in rows.iter().zip(off) {
        let idx: Vec<usize> = (0..3).map(|c| row[c].parse().unwrap()).collect();
        assert_eq!(idx, [e.k + 1, e.j + 1, e.i + 1]);
        let vals: Vec<f64> = (3..8).map(|c| row[c].parse().unwrap()).collect();
        assert_eq!(vals, [e.estimate, e.std_error, e.z_score, e.ci_low, e.ci_high]);
    }
}

#[test]
fn infer_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("noise.csv");
    write_table(&d, &default_names(4), &gaussian(200, 4, 9, 0.0)).unwrap();
    let csv = dir.path().join("ci.csv");

    let out = might(&["infer", "--data", s(&d), "--out", s(&csv), "--level", "1.5"]);
    assert_eq!(out.status.code(), Some(2));

    // Thresholds far above any correlation: no edges, header only.
    ok(&["infer", "--data", s(&d), "--out", s(&csv), "--c1", "1000", "--c3", "1000"]);
    assert_eq!(fs::read_to_string(&csv).unwrap().trim(), "k,j,i,estimate,std_error,z,ci_low,ci_high");

    // A support containing two identical covariates is singular.
    let mut x = gaussian(100, 3, 4, 0.0);
    let first = x.column(0).into_owned();
    x.set_column(1, &first);
    let dup = dir.path().join("dup.csv");
    write_table(&dup, &default_names(3), &x).unwrap();
    let est = dir.path().join("est");
    fs::create_dir(&est).unwrap();
    let mut theta = DMatrix::identity(3, 3);
    theta[(0, 1)] = 0.5;
    theta[(1, 0)] = 0.5;
    write_table(&est.join("theta_1.csv"), &default_names(3), &theta).unwrap();
    let out = might(&["infer", "--data", s(&dup), "--estimate", s(&est), "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("(k, j) = (1, 1)"), "{}", stderr(&out));

    let mut wrong = DMatrix::identity(2, 2);
    wrong[(0, 0)] = 2.0;
    write_table(&est.join("theta_1.csv"), &default_names(2), &wrong).unwrap();
    let out = might(&["infer", "--data", s(&dup), "--estimate", s(&est), "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("theta_1.csv"));
}

#[test]
fn benchmark_is_reproducible_and_validates_its_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#"{"p": 10, "k": 3, "n_per_dataset": 60, "replications": 3, "seed": 4}"#);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["benchmark", "--spec", s(&spec), "--out", s(&a), "--threads", "1"]);
    ok(&["benchmark", "--spec", s(&spec), "--out", s(&b), "--threads", "4"]);
    let results = fs::read(a.join("results.csv")).unwrap();
    assert_eq!(results, fs::read(b.join("results.csv")).unwrap());
    let text = String::from_utf8(results).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 4);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["replications"], 3);
    assert!(summary["summary"]["mcc_ngbr"]["mean"].as_f64().unwrap() > 1.0);

    let out = might(&["benchmark", "--spec", s(&spec), "--replications", "0", "--out", s(&a)]);
    assert_eq!(out.status.code(), Some(2));
    let bad = write_spec(dir.path(), r#"{"rho": 1.0}"#);
    let out = might(&["benchmark", "--spec", s(&bad), "--out", s(&a)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_split_and_refit_follow_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let classes: Vec<DMatrix<f64>> = (0..3).map(|c| gaussian(40 + 7 * c, 4, 20 + c as u64, 0.6 * c as f64)).collect();
    let paths: Vec<PathBuf> = (0..3).map(|c| dir.path().join(format!("class_{c}.csv"))).collect();
    for (p, x) in paths.iter().zip(&classes) {
        write_table(p, &default_names(4), x).unwrap();
    }
    let out = dir.path().join("cls");
    let mut args = vec!["classify"];
    for p in &paths {
        args.extend(["--class", s(p)]);
    }
    args.extend(["--split", "0.8", "--seed", "7", "--estimate-on", "train", "--out", s(&out)]);
    ok(&args);

    let split = stratified_split(&classes, 0.8, 7, RoundingMode::Floor).unwrap();
    let precisions = fit_class_precisions(&split.train, Method::Joint, &SolverConfig::default(), 1).unwrap();
    let model = fit_qda(&DatasetCollection::new(split.train.clone()).unwrap(), &precisions).unwrap();
    let expected = predict(&model, &split.test).unwrap();

    let mut reader = csv::Reader::from_path(out.join("predictions.csv")).unwrap();
    let rows: Vec<[usize; 3]> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            [r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap()]
        })
        .collect();
    assert_eq!(rows.len(), expected.len());
    for (row, p) in rows.iter().zip(&expected) {
        assert_eq!(*row, [p.class + 1, split.test_rows[p.class][p.row] + 1, p.predicted + 1]);
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["train_sizes"], serde_json::json!([32, 37, 43]));
    for key in ["accuracy", "tpr", "fpr", "mcc"] {
        assert!(report[key].is_number(), "{key}");
    }
}

#[test]
fn separated_classes_are_classified_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let train: Vec<PathBuf> = (0..2).map(|c| dir.path().join(format!("train_{c}.csv"))).collect();
    let test: Vec<PathBuf> = (0..2).map(|c| dir.path().join(format!("test_{c}.csv"))).collect();
    for c in 0..2 {
        let shift = 50.0 * c as f64;
        write_table(&train[c], &default_names(3), &gaussian(60, 3, c as u64, shift)).unwrap();
        write_table(&test[c], &default_names(3), &gaussian(25, 3, 10 + c as u64, shift)).unwrap();
    }
    let out = dir.path().join("cls");
    ok(&[
        "classify", "--train", s(&train[0]), "--train", s(&train[1]), "--test", s(&test[0]), "--test",
        s(&test[1]), "--method", "separate", "--out", s(&out),
    ]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["accuracy"], 1.0);
    assert_eq!(report["mcc"], 1.0);

    write_table(&test[1], &default_names(2), &gaussian(25, 2, 5, 0.0)).unwrap();
    let out = might(&[
        "classify", "--train", s(&train[0]), "--train", s(&train[1]), "--test", s(&test[0]), "--test",
        s(&test[1]), "--out", s(&dir.path().join("bad")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn normality_writes_one_value_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), r#"{"p": 10, "k": 2, "n_per_dataset": 200, "replications": 6}"#);
    let out = dir.path().join("norm");
    ok(&["normality", "--spec", s(&spec), "--entry", "1,1,2", "--no-symmetrize", "--out", s(&out)]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let entry = &report["entries"][0];
    let text = fs::read_to_string(out.join("z_1_1_2.txt")).unwrap();
    let values: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len() as u64, entry["samples"].as_u64().unwrap());
    assert_eq!(
        entry["samples"].as_u64().unwrap() + entry["unselected"].as_u64().unwrap() + entry["failed"].as_u64().unwrap(),
        6
    );

    let out2 = might(&["normality", "--spec", s(&spec), "--entry", "0,1,2", "--out", s(&out)]);
    assert_eq!(out2.status.code(), Some(2));
}

#[test]
fn help_and_version_exit_cleanly() {
    assert!(might(&["--help"]).status.success());
    assert!(might(&["--version"]).status.success());
    assert_eq!(might(&["estimate"]).status.code(), Some(2));
}
