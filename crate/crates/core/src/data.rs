//! Dataset ingestion, fold planning and feature-noise corruption.
//!
//! CSV files are plain comma-separated text with an optional single header
//! row and no quoting. Feature cells must parse as `f64`; the label column is
//! kept verbatim as a string. Class order is lexicographic.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: file is empty")]
    Empty { path: PathBuf },
    #[error("row {row} (line {line}), column {column}: cannot parse '{value}' as a number")]
    Parse {
        row: usize,
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: expected {expected} fields, found {got}")]
    Ragged {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("label column '{0}' not found")]
    MissingLabelColumn(String),
    #[error("dataset needs at least {needed} rows, found {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("cannot split {n} samples into {k} folds (need 2 <= k <= n)")]
    InvalidFolds { n: usize, k: usize },
    #[error("noise level {0} is outside [0, 100]")]
    InvalidNoiseLevel(f64),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Raw comma-separated table. Cells are kept as text so unmodified rows can
/// be written back byte-for-byte.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Option<Vec<String>>,
    pub records: Vec<Vec<String>>,
    /// 1-based source line of each record.
    pub lines: Vec<usize>,
}

impl CsvTable {
    pub fn parse(text: &str, has_header: bool) -> Result<CsvTable> {
        let mut header = None;
        let mut records = Vec::new();
        let mut lines = Vec::new();
        let mut width = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<String> = line.split(',').map(str::to_owned).collect();
            match width {
                None => width = Some(fields.len()),
                Some(w) if w != fields.len() => {
                    return Err(DataError::Ragged {
                        line: i + 1,
                        expected: w,
                        got: fields.len(),
                    })
                }
                _ => {}
            }
            if has_header && header.is_none() {
                header = Some(fields.into_iter().map(|f| f.trim().to_owned()).collect());
            } else {
                records.push(fields);
                lines.push(i + 1);
            }
        }
        Ok(CsvTable {
            header,
            records,
            lines,
        })
    }

    pub fn read(path: &Path, has_header: bool) -> Result<CsvTable> {
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_owned(),
            source,
        })?;
        CsvTable::parse(&text, has_header)
    }

    pub fn width(&self) -> usize {
        self.header
            .as_ref()
            .map(Vec::len)
            .or_else(|| self.records.first().map(Vec::len))
            .unwrap_or(0)
    }

    pub fn column_name(&self, j: usize) -> String {
        match &self.header {
            Some(h) => h[j].clone(),
            None => j.to_string(),
        }
    }

    /// Resolves a label column given by header name or 0-based index; `None`
    /// selects the last column.
    pub fn resolve_column(&self, spec: Option<&str>) -> Result<usize> {
        let width = self.width();
        let Some(spec) = spec else {
            return width
                .checked_sub(1)
                .ok_or_else(|| DataError::MissingLabelColumn("last".into()));
        };
        if let Some(h) = &self.header {
            if let Some(j) = h.iter().position(|c| c == spec) {
                return Ok(j);
            }
        }
        match spec.parse::<usize>() {
            Ok(j) if j < width => Ok(j),
            _ => Err(DataError::MissingLabelColumn(spec.to_owned())),
        }
    }

    /// Parses every column except `skip` as numeric features.
    pub fn features(&self, skip: Option<usize>) -> Result<Matrix> {
        let cols: Vec<usize> = (0..self.width()).filter(|&j| Some(j) != skip).collect();
        let mut data = Vec::with_capacity(self.records.len() * cols.len());
        for (r, rec) in self.records.iter().enumerate() {
            for &j in &cols {
                let cell = rec[j].trim();
                let v = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    DataError::Parse {
                        row: r + 1,
                        line: self.lines[r],
                        column: self.column_name(j),
                        value: cell.to_owned(),
                    }
                })?;
                data.push(v);
            }
        }
        Ok(Matrix::new(self.records.len(), cols.len(), data).expect("shape is consistent"))
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        if let Some(h) = &self.header {
            writeln!(w, "{}", h.join(","))?;
        }
        for rec in &self.records {
            writeln!(w, "{}", rec.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub x: Matrix,
    pub labels: Vec<String>,
    /// Distinct labels in lexicographic order.
    pub class_labels: Vec<String>,
}

pub fn sorted_classes<S: AsRef<str>>(labels: &[S]) -> Vec<String> {
    labels
        .iter()
        .map(|s| s.as_ref().to_owned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

impl Dataset {
    pub fn new(name: impl Into<String>, x: Matrix, labels: Vec<String>) -> Result<Dataset> {
        if x.rows() != labels.len() {
            return Err(DataError::Ragged {
                line: 0,
                expected: x.rows(),
                got: labels.len(),
            });
        }
        if x.rows() < 2 {
            return Err(DataError::TooFewRows {
                needed: 2,
                got: x.rows(),
            });
        }
        let class_labels = sorted_classes(&labels);
        Ok(Dataset {
            name: name.into(),
            x,
            labels,
            class_labels,
        })
    }

    pub fn from_table(name: impl Into<String>, table: &CsvTable, label_col: usize) -> Result<Dataset> {
        let x = table.features(Some(label_col))?;
        let labels = table
            .records
            .iter()
            .map(|r| r[label_col].trim().to_owned())
            .collect();
        Dataset::new(name, x, labels)
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> (Matrix, Vec<String>) {
        (
            self.x.select_rows(idx),
            idx.iter().map(|&i| self.labels[i].clone()).collect(),
        )
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

pub fn load_csv(path: &Path, label_column: Option<&str>, header: bool) -> Result<Dataset> {
    let table = CsvTable::read(path, header)?;
    if table.records.is_empty() {
        return Err(DataError::Empty {
            path: path.to_owned(),
        });
    }
    let label_col = table.resolve_column(label_column)?;
    Dataset::from_table(file_stem(path), &table, label_col)
}

/// Feature-only read for prediction inputs; an empty file yields zero rows.
pub fn load_features(path: &Path, header: bool, drop_column: Option<&str>) -> Result<Matrix> {
    let table = CsvTable::read(path, header)?;
    if table.records.is_empty() {
        return Ok(Matrix::zeros(0, 0));
    }
    let skip = drop_column.map(|c| table.resolve_column(Some(c))).transpose()?;
    table.features(skip)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(train, test)` sample indices for fold `f`, each in ascending order.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&i| self.assignments[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Shuffles sample indices with `seed` and deals them round-robin into `k` folds.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(DataError::InvalidFolds { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, assignments, seed })
}

/// Sample standard deviation of each column (0 for a single row).
pub fn column_std(x: &Matrix) -> Vec<f64> {
    let n = x.rows();
    (0..x.cols())
        .map(|j| {
            if n < 2 {
                return 0.0;
            }
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        })
        .collect()
}

/// Corrupts `round(level% × N)` randomly chosen samples: every feature of a
/// chosen sample gets zero-mean Gaussian noise whose standard deviation is the
/// dataset-wide standard deviation of that feature. Labels are untouched.
///
/// Returns the corrupted copy and the ascending indices of the modified rows.
pub fn inject_gaussian_noise_rows(ds: &Dataset, level: f64, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    if !(0.0..=100.0).contains(&level) {
        return Err(DataError::InvalidNoiseLevel(level));
    }
    let n = ds.len();
    let count = ((level / 100.0) * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = index::sample(&mut rng, n, count.min(n)).into_vec();
    rows.sort_unstable();
    let std = column_std(&ds.x);
    let mut out = ds.clone();
    for &i in &rows {
        for (v, s) in out.x.row_mut(i).iter_mut().zip(&std) {
            let z: f64 = rng.sample(StandardNormal);
            *v += s * z;
        }
    }
    Ok((out, rows))
}

pub fn inject_gaussian_noise(ds: &Dataset, level: f64, seed: u64) -> Result<Dataset> {
    inject_gaussian_noise_rows(ds, level, seed).map(|(d, _)| d)
}
