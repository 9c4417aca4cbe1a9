//! File formats: numeric CSV matrices, JSON matrices, estimate/path JSON
//! and the sample manifest.
//!
//! CSV is row-major with `.` decimals, no header, and 12 significant digits.
//! JSON numbers use the shortest representation that round-trips exactly.
//! Matrix indices written to files are 1-based.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::Source;
use crate::solver::{Estimate, PathResult};

/// `v` rounded to 12 significant digits, printed in its shortest form.
pub fn format_sig12(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if a != 0.0 && !(1e-5..1e15).contains(&a) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format_sig12(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_to_csv(m)).map_err(|e| Error::io(path, e))
}

/// Parses numeric CSV text; rows and columns in errors are 1-based.
pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (j, cell) in line.split(',').enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: i + 1,
                col: j + 1,
                msg: format!("cannot parse {:?} as a number", cell.trim()),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: i + 1,
                    col: j + 1,
                    msg: "non-finite value".into(),
                });
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: i + 1,
                    col: row.len().min(first.len()) + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 1,
            col: 1,
            msg: "no data rows".into(),
        });
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text, path)
}

/// Samples must be strictly positive; reports the first offending cell.
pub fn read_samples_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let m = read_matrix_csv(path)?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !(m[(i, j)] > 0.0) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: i + 1,
                    col: j + 1,
                    msg: format!("sample entries must be positive, found {}", m[(i, j)]),
                });
            }
        }
    }
    Ok(m)
}

/// `{"d": int, "entries": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub d: usize,
    pub entries: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixJson {
            d: m.nrows(),
            entries: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let ncols = self.entries.first().map_or(0, Vec::len);
        if self.entries.len() != self.d || self.entries.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidArgument(format!(
                "matrix JSON declares d={} but entries are not {}x{}",
                self.d, self.d, ncols
            )));
        }
        Ok(DMatrix::from_fn(self.d, ncols, |i, j| self.entries[i][j]))
    }
}

/// Reads a matrix from `.json` (matrix object) or anything else as CSV.
pub fn read_matrix_any(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed: MatrixJson = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        parsed.to_matrix()
    } else {
        read_matrix_csv(path)
    }
}

/// Serialized estimate; `lambda_upper` holds 1-based `[j, k, value]`
/// triples for the non-zero entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateJson {
    pub d: usize,
    pub r: f64,
    pub mu: Vec<f64>,
    pub lambda_upper: Vec<(usize, usize, f64)>,
    pub objective: f64,
    pub sweeps: usize,
    pub converged: bool,
}

impl From<&Estimate> for EstimateJson {
    fn from(est: &Estimate) -> Self {
        EstimateJson {
            d: est.dim(),
            r: est.r,
            mu: est.mu.as_vector().iter().copied().collect(),
            lambda_upper: est
                .lambda
                .nonzeros()
                .into_iter()
                .map(|(j, k, v)| (j + 1, k + 1, v))
                .collect(),
            objective: est.objective,
            sweeps: est.sweeps_used,
            converged: est.converged,
        }
    }
}

pub fn path_to_json(path: &PathResult) -> Vec<EstimateJson> {
    path.estimates.iter().map(EstimateJson::from).collect()
}

/// Sidecar manifest describing a sample CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub d: usize,
    pub n: usize,
    pub n_u: usize,
    pub seed: u64,
    pub source: Source,
    pub gamma_design: String,
    pub quantile: Option<f64>,
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
