//! CSV and JSON files.
//!
//! Datasets and matrices are dense CSV with a header row of covariate names.
//! Numbers are written with 17 significant digits so a write-then-read round
//! trip is exact.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// One CSV file: header names and an `n × p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub path: PathBuf,
    pub names: Vec<String>,
    pub matrix: DMatrix<f64>,
}

/// Scientific notation with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return v.to_string();
    }
    format!("{v:.16e}")
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(CliError::input(format!("{}: missing header row", path.display())));
    }
    let p = names.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if record.len() != p {
            return Err(CliError::input(format!(
                "{}: row {} has {} fields, header has {p}",
                path.display(),
                r + 1,
                record.len()
            )));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::input(format!(
                    "{}: row {}, column '{}': cannot parse {field:?} as a number",
                    path.display(),
                    r + 1,
                    names[c]
                ))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    Ok(Table {
        path: path.to_path_buf(),
        names,
        matrix: DMatrix::from_row_slice(rows, p, &values),
    })
}

pub fn write_table(path: &Path, names: &[String], matrix: &DMatrix<f64>) -> CliResult<()> {
    assert_eq!(names.len(), matrix.ncols(), "one name per column");
    let mut writer = csv::Writer::from_path(path).map_err(|e| write_error(path, e))?;
    writer.write_record(names).map_err(|e| write_error(path, e))?;
    for r in 0..matrix.nrows() {
        writer
            .write_record(matrix.row(r).iter().map(|v| format_f64(*v)))
            .map_err(|e| write_error(path, e))?;
    }
    writer.flush().map_err(|e| write_error(path, e))
}

/// Default names `x1, ..., xp`.
pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("x{i}")).collect()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| write_error(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| write_error(path, e))
}

pub fn write_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::input(format!("cannot write {}: {e}", path.display()))
}

/// `dir/theta_<k>.csv` with 1-based `k`.
pub fn theta_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("theta_{}.csv", k + 1))
}
