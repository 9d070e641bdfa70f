//! Time-series container with train/validation/test split bookkeeping and the
//! CSV interchange format used by the CLI: a header row with one column per
//! series dimension, decimal-point floats, no index column.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contiguous, ordered split: train = [0, n_train), validation follows,
/// test follows that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

impl Split {
    pub fn total(&self) -> usize {
        self.n_train + self.n_val + self.n_test
    }

    pub fn train_range(&self) -> std::ops::Range<usize> {
        0..self.n_train
    }

    pub fn val_range(&self) -> std::ops::Range<usize> {
        self.n_train..self.n_train + self.n_val
    }

    pub fn test_range(&self) -> std::ops::Range<usize> {
        self.n_train + self.n_val..self.total()
    }
}

/// Univariate or multivariate real-valued sequence, stored row-major
/// (time index varies along the outer axis).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dim: usize,
    data: Vec<f64>,
    names: Vec<String>,
    pub split: Option<Split>,
}

impl TimeSeries {
    pub fn univariate(values: Vec<f64>) -> Self {
        TimeSeries { dim: 1, data: values, names: vec!["y0".into()], split: None }
    }

    pub fn multivariate(dim: usize, rows: Vec<f64>) -> Result<Self> {
        if dim == 0 || rows.len() % dim != 0 {
            return Err(Error::Shape("row data does not tile the given dimension".into()));
        }
        let names = (0..dim).map(|i| format!("y{i}")).collect();
        Ok(TimeSeries { dim, data: rows, names, split: None })
    }

    pub fn with_split(mut self, split: Split) -> Result<Self> {
        if split.total() > self.len() {
            return Err(Error::Config(format!(
                "split sizes sum to {} but the series has {} samples",
                split.total(),
                self.len()
            )));
        }
        if split.n_train == 0 || split.n_val == 0 || split.n_test == 0 {
            return Err(Error::Config("every split segment must be non-empty".into()));
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|t| self.data[t * self.dim + i]).collect()
    }

    /// Borrow the values of a univariate series without copying.
    pub fn univariate_values(&self) -> Result<&[f64]> {
        if self.dim == 1 {
            Ok(&self.data)
        } else {
            Err(Error::Shape(format!("expected a univariate series, found dim {}", self.dim)))
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.names.join(","));
        out.push('\n');
        for t in 0..self.len() {
            let mut first = true;
            for v in self.row(t) {
                if !first {
                    out.push(',');
                }
                // `{}` prints the shortest representation that round-trips.
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Data("empty CSV".into()))?;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let dim = names.len();
        if dim == 0 {
            return Err(Error::Data("CSV header has no columns".into()));
        }
        let mut data = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim {
                return Err(Error::Data(format!(
                    "CSV row {} has {} fields, expected {dim}",
                    lineno + 2,
                    fields.len()
                )));
            }
            for f in fields {
                let v: f64 = f.trim().parse().map_err(|_| {
                    Error::Data(format!("CSV row {}: cannot parse '{f}' as a number", lineno + 2))
                })?;
                data.push(v);
            }
        }
        if data.is_empty() {
            return Err(Error::Data("CSV contains no data rows".into()));
        }
        Ok(TimeSeries { dim, data, names, split: None })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }
}
