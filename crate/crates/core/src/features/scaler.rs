use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// Per-feature z-scoring fitted on a training matrix. Zero-variance columns
/// get scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &FeatureMatrix) -> Result<Self> {
        if train.rows() == 0 {
            return Err(Error::invalid("cannot fit a scaler on an empty matrix"));
        }
        let n = train.rows() as f64;
        let cols = train.cols();
        let mut mean = vec![0.0; cols];
        for r in train.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; cols];
        for r in train.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 { sd } else { 1.0 }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::LengthMismatch { expected: self.mean.len(), actual: x.cols() });
        }
        FeatureMatrix::from_rows(x.iter_rows().map(|r| self.transform_row(r)).collect(), x.cols())
    }
}

/// Fit on `train`, apply to both.
pub fn standardize(
    train: &FeatureMatrix,
    apply_to: &FeatureMatrix,
) -> Result<(FeatureMatrix, FeatureMatrix, Standardizer)> {
    let scaler = Standardizer::fit(train)?;
    Ok((scaler.transform(train)?, scaler.transform(apply_to)?, scaler))
}
