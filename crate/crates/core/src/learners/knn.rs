use serde::{Deserialize, Serialize};

use super::check_training;
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    Euclidean,
    Manhattan,
    Cosine,
}

impl Distance {
    /// Cosine distance is `1 - cos`; a zero vector is at distance 1 from
    /// everything.
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt(),
            Distance::Manhattan => a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum(),
            Distance::Cosine => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (p, q) in a.iter().zip(b) {
                    dot += p * q;
                    na += p * p;
                    nb += q * q;
                }
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    1.0 - dot / (na.sqrt() * nb.sqrt())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
    pub metric: Distance,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 7, metric: Distance::Euclidean }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("knn: k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub metric: Distance,
    pub class_count: usize,
    train: FeatureMatrix,
    labels: Vec<usize>,
}

impl KnnModel {
    pub fn fit(p: &KnnParams, x: &FeatureMatrix, y: &[usize], class_count: usize) -> Result<Self> {
        p.validate()?;
        check_training(x, y, class_count)?;
        if p.k > x.rows() {
            return Err(Error::invalid(format!("k = {} exceeds {} training samples", p.k, x.rows())));
        }
        Ok(Self { k: p.k, metric: p.metric, class_count, train: x.clone(), labels: y.to_vec() })
    }

    /// Indices of the k nearest training rows; equal distances keep the lower
    /// training index first.
    pub fn neighbors(&self, row: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> =
            self.train.iter_rows().enumerate().map(|(i, t)| (self.metric.eval(row, t), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.class_count];
        for i in self.neighbors(row) {
            p[self.labels[i]] += 1.0;
        }
        p.iter_mut().for_each(|v| *v /= self.k as f64);
        p
    }
}
