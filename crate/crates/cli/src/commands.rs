//! One function per subcommand. Each reads its inputs, runs the library and
//! writes its outputs; nothing is printed except warnings on stderr.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use might::estimator::with_threads;
use might::inference::z_scores;
use might::qda::{evaluate, fit_qda, predict, report, stratified_split, RoundingMode};
use might::simbench::{
    generate_truth, normality_study, run_experiment, sample_data, Metric, StudyEntry,
};
use might::{estimate, support_sets, symmetrize, DatasetCollection, Error, JointPrecision, SolveTrace, SolverConfig};

use crate::config::{SolverArgs, SpecArgs};
use crate::error::{classify, CliError, CliResult};
use crate::io::{
    create_dir, default_names, format_f64, read_json, read_table, theta_path, write_error, write_json,
    write_table, Table,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Input datasets with their file paths and covariate names.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub paths: Vec<PathBuf>,
    pub names: Vec<String>,
    pub collection: DatasetCollection,
}

/// Reads one CSV per dataset, checks them and centers them unless asked not to.
pub fn load_data(paths: &[PathBuf], center: bool) -> CliResult<LoadedData> {
    if paths.is_empty() {
        return Err(CliError::input("at least one --data file is required"));
    }
    let tables = paths.iter().map(|p| read_table(p)).collect::<CliResult<Vec<Table>>>()?;
    let names = tables[0].names.clone();
    for t in &tables[1..] {
        if t.names.len() != names.len() {
            return Err(CliError::input(format!(
                "{} has {} columns but {} has {}",
                t.path.display(),
                t.names.len(),
                tables[0].path.display(),
                names.len()
            )));
        }
    }
    let collection = DatasetCollection::new(tables.iter().map(|t| t.matrix.clone()).collect())
        .map_err(|e| data_error(&e, paths, &names))?;
    collection.validate().map_err(|e| data_error(&e, paths, &names))?;
    let collection = if center {
        let c = collection.centered();
        c.validate().map_err(|e| data_error(&e, paths, &names))?;
        c
    } else {
        collection
    };
    Ok(LoadedData {
        paths: paths.to_vec(),
        names,
        collection,
    })
}

/// Rewrites dataset and covariate indices as file paths and column names.
pub fn data_error(e: &Error, paths: &[PathBuf], names: &[String]) -> CliError {
    let file = |d: usize| paths.get(d).map(|p| p.display().to_string()).unwrap_or_else(|| format!("dataset {}", d + 1));
    let name = |c: usize| names.get(c).cloned().unwrap_or_else(|| format!("column {}", c + 1));
    let message = match e {
        Error::DimensionMismatch { dataset, expected, found } => {
            format!("{}: has {found} columns, expected {expected}", file(*dataset))
        }
        Error::TooFewObservations { dataset, found, required } => {
            format!("{}: has {found} rows, need at least {required}", file(*dataset))
        }
        Error::DegenerateCovariate { dataset, covariate } => {
            format!("{}: covariate '{}' has zero variance", file(*dataset), name(*covariate))
        }
        Error::NonFiniteInput { dataset, row, column } => format!(
            "{}: row {}, covariate '{}' is not finite",
            file(*dataset),
            row + 1,
            name(*column)
        ),
        Error::Node { node, source } => format!("node {} ('{}'): {source}", node + 1, name(*node)),
        Error::SingularSubmatrix { dataset, node, rcond } => format!(
            "singular support submatrix at (k, j) = ({}, {}) ('{}'), rcond {rcond:.3e}",
            dataset + 1,
            node + 1,
            name(*node)
        ),
        Error::SupportTooLarge { dataset, node, size, n } => format!(
            "support at (k, j) = ({}, {}) has {size} entries but only {n} observations",
            dataset + 1,
            node + 1
        ),
        other => other.to_string(),
    };
    classify(e, message)
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// One CSV per dataset (repeat the flag); header row of covariate names.
    #[arg(long = "data", required = true, value_name = "FILE")]
    pub data: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Write the raw node-wise estimate instead of the symmetrized one.
    #[arg(long)]
    pub no_symmetrize: bool,
    /// Use the data as given instead of centering each dataset.
    #[arg(long)]
    pub no_center: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Serialize)]
struct NodeTrace<'a> {
    node: usize,
    name: &'a str,
    #[serde(flatten)]
    trace: &'a SolveTrace,
}

/// Fits the joint estimate and writes `theta_<k>.csv`, `supports.json` and
/// `trace.json` to `args.out`.
pub fn run_estimate(args: &EstimateArgs, threads: usize) -> CliResult<()> {
    let data = load_data(&args.data, !args.no_center)?;
    let config = args.solver.resolve_for(data.collection.k())?;
    let (raw, traces) = estimate(&data.collection, &config, threads)
        .map_err(|e| data_error(&e, &data.paths, &data.names))?;
    let result = if args.no_symmetrize { raw } else { symmetrize(&raw) };

    create_dir(&args.out)?;
    write_estimate(&args.out, &data.names, &result)?;
    let sets = support_sets(&result);
    let one_based = |v: &Vec<usize>| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    write_json(
        &args.out.join("supports.json"),
        &json!({
            "symmetrized": result.is_symmetrized(),
            "covariates": data.names,
            "per_graph": sets.per_graph.iter().map(|g| g.iter().map(one_based).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "union": sets.union.iter().map(one_based).collect::<Vec<_>>(),
            "union_sizes": sets.union_sizes(),
            "total_sizes": sets.total_sizes(),
            "neighbor_similarity": sets.neighbor_similarity(),
            "edge_sparsity": sets.edge_sparsity(),
        }),
    )?;
    let nodes: Vec<NodeTrace> = traces
        .iter()
        .enumerate()
        .map(|(j, trace)| NodeTrace {
            node: j + 1,
            name: &data.names[j],
            trace,
        })
        .collect();
    write_json(
        &args.out.join("trace.json"),
        &json!({
            "version": VERSION,
            "command": "estimate",
            "data": data.paths,
            "observations": data.collection.ns(),
            "covariates": data.names,
            "center": !args.no_center,
            "symmetrize": !args.no_symmetrize,
            "seeds": [],
            "config": config,
            "s0_grid": config.grid(data.collection.k()),
            "nodes": nodes,
        }),
    )
}

pub fn write_estimate(dir: &Path, names: &[String], estimate: &JointPrecision) -> CliResult<()> {
    for (k, m) in estimate.matrices().iter().enumerate() {
        write_table(&theta_path(dir, k), names, m)?;
    }
    Ok(())
}

/// Reads `theta_1.csv, ..., theta_<k>.csv` from `dir`, each `p × p`.
pub fn read_estimate(dir: &Path, k: usize, p: usize) -> CliResult<JointPrecision> {
    let mut matrices = Vec::with_capacity(k);
    for kk in 0..k {
        let path = theta_path(dir, kk);
        let t = read_table(&path)?;
        if t.matrix.shape() != (p, p) {
            return Err(CliError::input(format!(
                "{}: expected a {p} × {p} matrix, found {} × {}",
                path.display(),
                t.matrix.nrows(),
                t.matrix.ncols()
            )));
        }
        matrices.push(t.matrix);
    }
    let extra = theta_path(dir, k);
    if extra.exists() {
        return Err(CliError::input(format!(
            "{} exists but only {k} datasets were given",
            extra.display()
        )));
    }
    let symmetrized = dir
        .join("trace.json")
        .exists()
        .then(|| read_json::<serde_json::Value>(&dir.join("trace.json")).ok())
        .flatten()
        .and_then(|v| v.get("symmetrize").and_then(serde_json::Value::as_bool))
        .unwrap_or(false);
    JointPrecision::new(matrices, symmetrized).map_err(CliError::from)
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Which replication's truth and data to write.
    #[arg(long, default_value_t = 0)]
    pub replication: u64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

/// Writes the true precision matrices, the sampled datasets, the full truth
/// and the resolved spec.
pub fn run_simulate(args: &SimulateArgs) -> CliResult<()> {
    let spec = args.spec.resolve()?;
    let truth = generate_truth(&spec, args.replication);
    let data = sample_data(&truth, &spec, args.replication);
    let names = default_names(spec.p);
    create_dir(&args.out)?;
    for (k, theta) in truth.theta.iter().enumerate() {
        write_table(&theta_path(&args.out, k), &names, theta)?;
        write_table(&args.out.join(format!("data_{}.csv", k + 1)), &names, data.dataset(k))?;
    }
    write_json(&args.out.join("truth.json"), &truth)?;
    write_json(
        &args.out.join("spec.json"),
        &json!({"version": VERSION, "replication": args.replication, "spec": spec}),
    )
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

/// Writes `results.csv` (replication, metric, value) and `summary.json`.
/// MCC values are scaled by 100 in both files.
pub fn run_benchmark(args: &BenchmarkArgs, threads: usize) -> CliResult<()> {
    let spec = args.spec.resolve()?;
    let table = run_experiment(&spec, threads)?;
    create_dir(&args.out)?;
    let path = args.out.join("results.csv");
    let mut writer = csv::Writer::from_path(&path).map_err(|e| write_error(&path, e))?;
    writer
        .write_record(["replication", "metric", "value"])
        .map_err(|e| write_error(&path, e))?;
    for record in &table.records {
        for metric in Metric::ALL {
            writer
                .write_record([
                    record.replication.to_string(),
                    metric.name().to_string(),
                    format_f64(metric.tabular(&record.metrics)),
                ])
                .map_err(|e| write_error(&path, e))?;
        }
    }
    writer.flush().map_err(|e| write_error(&path, e))?;
    let replications: Vec<_> = table
        .records
        .iter()
        .map(|r| {
            json!({
                "replication": r.replication,
                "truth_s0": r.truth_s0,
                "truth_s": r.truth_s,
                "mean_selected_s0": r.mean_selected_s0,
                "wall_time_secs": r.wall_time_secs,
            })
        })
        .collect();
    write_json(
        &args.out.join("summary.json"),
        &json!({
            "version": VERSION,
            "spec": table.spec,
            "summary": table.summary,
            "replications": replications,
        }),
    )
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    /// One CSV per dataset, as for `estimate`.
    #[arg(long = "data", required = true, value_name = "FILE")]
    pub data: Vec<PathBuf>,
    /// Directory with `theta_<k>.csv` from `estimate --no-symmetrize`; the
    /// raw estimate is refit when omitted.
    #[arg(long, value_name = "DIR")]
    pub estimate: Option<PathBuf>,
    /// Output CSV.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Confidence level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Null value of the z-tests.
    #[arg(long, default_value_t = 0.0)]
    pub hypothesized: f64,
    /// Also report the diagonal entries.
    #[arg(long)]
    pub include_diagonal: bool,
    #[arg(long)]
    pub no_center: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

pub const INFER_HEADER: [&str; 8] = ["k", "j", "i", "estimate", "std_error", "z", "ci_low", "ci_high"];

/// Writes one row per selected off-diagonal entry (and the diagonal on
/// request) with 1-based `k`, `j`, `i`.
pub fn run_infer(args: &InferArgs, threads: usize) -> CliResult<()> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::input(format!(
            "--level must lie in (0, 1), got {}",
            args.level
        )));
    }
    let data = load_data(&args.data, !args.no_center)?;
    let (k, p) = (data.collection.k(), data.collection.p());
    let fitted = match &args.estimate {
        Some(dir) => {
            let est = read_estimate(dir, k, p)?;
            if est.is_symmetrized() {
                eprintln!(
                    "warning: {} holds a symmetrized estimate; the standard errors describe the raw node-wise estimate",
                    dir.display()
                );
            }
            est
        }
        None => {
            let config = args.solver.resolve_for(k)?;
            estimate(&data.collection, &config, threads)
                .map_err(|e| data_error(&e, &data.paths, &data.names))?
                .0
        }
    };
    let result = with_threads(threads, || {
        z_scores(&data.collection, &fitted, args.level, args.hypothesized)
    })?
    .map_err(|e| data_error(&e, &data.paths, &data.names))?;
    if result.floored_count() > 0 {
        eprintln!(
            "warning: {} variance estimates were floored",
            result.floored_count()
        );
    }
    let path = &args.out;
    let mut writer = csv::Writer::from_path(path).map_err(|e| write_error(path, e))?;
    writer.write_record(INFER_HEADER).map_err(|e| write_error(path, e))?;
    for e in result.entries.iter().filter(|e| args.include_diagonal || e.i != e.j) {
        writer
            .write_record([
                (e.k + 1).to_string(),
                (e.j + 1).to_string(),
                (e.i + 1).to_string(),
                format_f64(e.estimate),
                format_f64(e.std_error),
                format_f64(e.z_score),
                format_f64(e.ci_low),
                format_f64(e.ci_high),
            ])
            .map_err(|e| write_error(path, e))?;
    }
    writer.flush().map_err(|e| write_error(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// One joint fit across all classes.
    Joint,
    /// An independent single-dataset fit per class.
    Separate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateOn {
    /// Fit the precision matrices on the training rows only.
    Train,
    /// Fit on training and test rows together.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    Floor,
    Nearest,
}

impl From<Rounding> for RoundingMode {
    fn from(r: Rounding) -> Self {
        match r {
            Rounding::Floor => RoundingMode::Floor,
            Rounding::Nearest => RoundingMode::Nearest,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// One CSV per class, split into train and test by `--split`.
    #[arg(long = "class", value_name = "FILE", conflicts_with_all = ["train", "test"])]
    pub class: Vec<PathBuf>,
    /// Training CSV per class (use with `--test`, same order).
    #[arg(long = "train", value_name = "FILE", requires = "test")]
    pub train: Vec<PathBuf>,
    #[arg(long = "test", value_name = "FILE", requires = "train")]
    pub test: Vec<PathBuf>,
    /// Fraction of each class used for training.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Rounding::Floor)]
    pub rounding: Rounding,
    #[arg(long, value_enum, default_value_t = Method::Joint)]
    pub method: Method,
    /// Which rows the precision matrices are fit on.
    #[arg(long, value_enum, default_value_t = EstimateOn::Train, conflicts_with = "estimate")]
    pub estimate_on: EstimateOn,
    /// Use precomputed `theta_<k>.csv` files instead of fitting.
    #[arg(long, value_name = "DIR")]
    pub estimate: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Training and test rows of every class, with original row numbers.
pub struct ClassData {
    pub names: Vec<String>,
    pub paths: Vec<PathBuf>,
    pub train: Vec<DMatrix<f64>>,
    pub test: Vec<DMatrix<f64>>,
    pub test_rows: Vec<Vec<usize>>,
}

fn load_classes(args: &ClassifyArgs) -> CliResult<ClassData> {
    let read_all = |paths: &[PathBuf]| paths.iter().map(|p| read_table(p)).collect::<CliResult<Vec<Table>>>();
    let check = |tables: &[Table], names: &[String]| -> CliResult<()> {
        for t in tables {
            if t.names.len() != names.len() {
                return Err(CliError::input(format!(
                    "{}: has {} columns, expected {}",
                    t.path.display(),
                    t.names.len(),
                    names.len()
                )));
            }
        }
        Ok(())
    };
    if !args.class.is_empty() {
        if args.class.len() < 2 {
            return Err(CliError::input("at least two --class files are required"));
        }
        let tables = read_all(&args.class)?;
        let names = tables[0].names.clone();
        check(&tables, &names)?;
        let matrices: Vec<DMatrix<f64>> = tables.into_iter().map(|t| t.matrix).collect();
        let split = stratified_split(&matrices, args.split, args.seed, args.rounding.into())
            .map_err(|e| data_error(&e, &args.class, &names))?;
        return Ok(ClassData {
            names,
            paths: args.class.clone(),
            train: split.train,
            test: split.test,
            test_rows: split.test_rows,
        });
    }
    if args.train.len() < 2 || args.train.len() != args.test.len() {
        return Err(CliError::input(
            "give either --class per class, or matching --train and --test files for at least two classes",
        ));
    }
    let train = read_all(&args.train)?;
    let test = read_all(&args.test)?;
    let names = train[0].names.clone();
    check(&train, &names)?;
    check(&test, &names)?;
    Ok(ClassData {
        names,
        paths: args.train.clone(),
        test_rows: test.iter().map(|t| (0..t.matrix.nrows()).collect()).collect(),
        train: train.into_iter().map(|t| t.matrix).collect(),
        test: test.into_iter().map(|t| t.matrix).collect(),
    })
}

/// Class precision matrices from a joint fit or from one fit per class, on
/// centered data. The result is symmetrized.
pub fn fit_class_precisions(
    classes: &[DMatrix<f64>],
    method: Method,
    config: &SolverConfig,
    threads: usize,
) -> Result<JointPrecision, Error> {
    let collection = DatasetCollection::new(classes.to_vec())?;
    collection.validate()?;
    let centered = collection.centered();
    let raw = match method {
        Method::Joint => estimate(&centered, config, threads)?.0,
        Method::Separate => {
            let mut matrices = Vec::with_capacity(centered.k());
            for x in centered.datasets() {
                let (est, _) = estimate(&DatasetCollection::new(vec![x.clone()])?, config, threads)?;
                matrices.push(est.matrix(0).clone());
            }
            JointPrecision::new(matrices, false)?
        }
    };
    Ok(symmetrize(&raw))
}

/// Test accuracy of QDA with the given precision source, for library callers.
pub fn qda_accuracy(
    train: &[DMatrix<f64>],
    test: &[DMatrix<f64>],
    method: Method,
    config: &SolverConfig,
    threads: usize,
) -> Result<f64, Error> {
    let precisions = fit_class_precisions(train, method, config, threads)?;
    let model = fit_qda(&DatasetCollection::new(train.to_vec())?, &precisions)?;
    Ok(with_threads(threads, || evaluate(&model, test))??.accuracy)
}

/// Writes `predictions.csv` (class, row, predicted; 1-based, rows refer to
/// the input file) and `report.json`.
pub fn run_classify(args: &ClassifyArgs, threads: usize) -> CliResult<()> {
    let data = load_classes(args)?;
    let k = data.train.len();
    let config = args.solver.resolve_for(if args.method == Method::Joint { k } else { 1 })?;
    let precisions = match &args.estimate {
        Some(dir) => read_estimate(dir, k, data.names.len())?,
        None => {
            let fit_rows: Vec<DMatrix<f64>> = match args.estimate_on {
                EstimateOn::Train => data.train.clone(),
                EstimateOn::All => data
                    .train
                    .iter()
                    .zip(&data.test)
                    .map(|(a, b)| {
                        let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
                        m.rows_mut(0, a.nrows()).copy_from(a);
                        m.rows_mut(a.nrows(), b.nrows()).copy_from(b);
                        m
                    })
                    .collect(),
            };
            fit_class_precisions(&fit_rows, args.method, &config, threads)
                .map_err(|e| data_error(&e, &data.paths, &data.names))?
        }
    };
    let train = DatasetCollection::new(data.train.clone()).map_err(|e| data_error(&e, &data.paths, &data.names))?;
    let model = fit_qda(&train, &precisions).map_err(|e| data_error(&e, &data.paths, &data.names))?;
    let predictions = with_threads(threads, || predict(&model, &data.test))?
        .map_err(|e| data_error(&e, &data.paths, &data.names))?;
    let summary = report(k, &predictions);

    create_dir(&args.out)?;
    let path = args.out.join("predictions.csv");
    let mut writer = csv::Writer::from_path(&path).map_err(|e| write_error(&path, e))?;
    writer
        .write_record(["class", "row", "predicted"])
        .map_err(|e| write_error(&path, e))?;
    for p in &predictions {
        writer
            .write_record([
                (p.class + 1).to_string(),
                (data.test_rows[p.class][p.row] + 1).to_string(),
                (p.predicted + 1).to_string(),
            ])
            .map_err(|e| write_error(&path, e))?;
    }
    writer.flush().map_err(|e| write_error(&path, e))?;
    write_json(
        &args.out.join("report.json"),
        &json!({
            "version": VERSION,
            "method": args.method,
            "estimate_on": if args.estimate.is_some() { None } else { Some(args.estimate_on) },
            "split": if args.class.is_empty() { None } else { Some(args.split) },
            "seed": args.seed,
            "rounding": args.rounding,
            "config": config,
            "train_sizes": data.train.iter().map(|m| m.nrows()).collect::<Vec<_>>(),
            "test_sizes": data.test.iter().map(|m| m.nrows()).collect::<Vec<_>>(),
            "floored_eigenvalues": model.floored_eigenvalues,
            "accuracy": summary.accuracy,
            "tpr": summary.tpr,
            "fpr": summary.fpr,
            "mcc": summary.mcc,
            "confusion": summary.confusion,
        }),
    )
}

#[derive(Debug, Clone, Args)]
pub struct NormalityArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Entry `k,i,j` (1-based) of the true support to study; repeatable.
    #[arg(long = "entry", required = true, value_name = "K,I,J", value_parser = parse_entry)]
    pub entries: Vec<StudyEntry>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

/// Parses a 1-based `k,i,j` triple into a 0-based entry.
pub fn parse_entry(s: &str) -> Result<StudyEntry, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| format!("bad index {v:?} in {s:?}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [k, i, j] if k >= 1 && i >= 1 && j >= 1 => Ok(StudyEntry {
            k: k - 1,
            i: i - 1,
            j: j - 1,
        }),
        _ => Err(format!("expected three 1-based indices k,i,j, got {s:?}")),
    }
}

/// Writes one studentized value per line to `z_<k>_<i>_<j>.txt` and a
/// summary to `report.json`.
pub fn run_normality(args: &NormalityArgs, threads: usize) -> CliResult<()> {
    let spec = args.spec.resolve()?;
    let study = normality_study(&spec, &args.entries, spec.replications, threads)?;
    create_dir(&args.out)?;
    let mut entries = Vec::new();
    for e in &study.entries {
        let (k, i, j) = (e.entry.k + 1, e.entry.i + 1, e.entry.j + 1);
        let path = args.out.join(format!("z_{k}_{i}_{j}.txt"));
        let text: String = e.samples.iter().map(|z| format_f64(*z) + "\n").collect();
        std::fs::write(&path, text).map_err(|err| write_error(&path, err))?;
        if let Some(w) = &e.warning {
            eprintln!("warning: entry ({k}, {i}, {j}): {w}");
        }
        entries.push(json!({
            "k": k, "i": i, "j": j,
            "truth": e.truth_value,
            "samples": e.samples.len(),
            "unselected": e.unselected,
            "failed": e.failed,
            "mean": e.mean,
            "ks": e.ks,
            "warning": e.warning,
        }));
    }
    write_json(
        &args.out.join("report.json"),
        &json!({
            "version": VERSION,
            "spec": spec,
            "truth_draw": study.truth_draw,
            "entries": entries,
        }),
    )
}
