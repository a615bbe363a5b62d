//! Feature matrices and labelled datasets.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureRegistry;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, cols: usize) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(Error::invalid(format!("row {i} has {} values, expected {cols}", r.len())));
            }
            data.extend(r);
        }
        Ok(Self { rows: n, cols, data })
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }
}

/// Feature matrix with integer labels and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Stable per-row identifier (file name or synthetic sample id).
    pub sample_ids: Vec<String>,
    /// Generator seed per row, when synthetic.
    pub seeds: Vec<Option<u64>>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        features: FeatureMatrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
        sample_ids: Vec<String>,
        seeds: Vec<Option<u64>>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let n = features.rows();
        for (what, len) in [("labels", labels.len()), ("sample ids", sample_ids.len()), ("seeds", seeds.len())] {
            if len != n {
                return Err(Error::invalid(format!("{what}: {len} entries for {n} rows")));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(Self { features, labels, class_names, sample_ids, seeds, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Feature CSV: `sample_id,label,<registry names...>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["sample_id".to_string(), "label".to_string()];
        if self.features.cols() == FeatureRegistry.len() {
            header.extend(FeatureRegistry.names().into_iter().map(String::from));
        } else {
            header.extend((0..self.features.cols()).map(|j| format!("f{j}")));
        }
        w.write_record(&header)?;
        for (i, row) in self.features.iter_rows().enumerate() {
            let mut rec = vec![self.sample_ids[i].clone(), self.labels[i].to_string()];
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
