use serde::{Deserialize, Serialize};

use super::{ModelKind, ModelParams, TrainedModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleParams {
    pub members: Vec<ModelParams>,
    pub weights: Vec<f64>,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            members: [ModelKind::Svm, ModelKind::Rf, ModelKind::Gbt]
                .into_iter()
                .map(ModelParams::default_for)
                .collect(),
            weights: vec![1.0; 3],
        }
    }
}

impl EnsembleParams {
    pub fn validate(&self) -> Result<()> {
        check_weights(self.members.len(), &self.weights).map_err(|e| Error::Config(format!("ensemble: {e}")))?;
        for m in &self.members {
            if m.kind() == ModelKind::Ensemble {
                return Err(Error::Config("ensemble: members cannot be ensembles".into()));
            }
            m.validate()?;
        }
        Ok(())
    }
}

fn check_weights(members: usize, weights: &[f64]) -> Result<()> {
    if members == 0 {
        return Err(Error::invalid("no members"));
    }
    if weights.len() != members {
        return Err(Error::invalid(format!("{} weights for {members} members", weights.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || weights.iter().all(|&w| w == 0.0) {
        return Err(Error::invalid(format!("weights must be non-negative and not all zero: {weights:?}")));
    }
    Ok(())
}

/// Weighted soft vote over fitted members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub members: Vec<TrainedModel>,
    pub weights: Vec<f64>,
}

impl EnsembleModel {
    pub fn new(members: Vec<TrainedModel>, weights: Vec<f64>) -> Result<Self> {
        check_weights(members.len(), &weights)?;
        let c = members[0].class_count;
        if let Some(m) = members.iter().find(|m| m.class_count != c) {
            return Err(Error::invalid(format!(
                "ensemble member {} has {} classes, expected {c}",
                m.kind, m.class_count
            )));
        }
        Ok(Self { members, weights })
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let probs: Vec<Vec<f64>> = self.members.iter().map(|m| m.model_proba(row)).collect();
        combine(&probs, &self.weights)
    }
}

/// `sum_i w_i P_i / sum_i w_i`.
pub fn combine(probs: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut out = vec![0.0; probs[0].len()];
    for (p, w) in probs.iter().zip(weights) {
        for (o, v) in out.iter_mut().zip(p) {
            *o += w * v;
        }
    }
    out.iter_mut().for_each(|v| *v /= total);
    out
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{argmax, compose_ensemble, fit, KnnParams, ModelSpec, RfParams};
    use super::*;

    #[test]
    fn hand_arithmetic_two_members() {
        let p = combine(&[vec![0.6, 0.4], vec![0.2, 0.8]], &[1.0, 1.0]);
        assert!((p[0] - 0.4).abs() < 1e-15 && (p[1] - 0.6).abs() < 1e-15);
        assert_eq!(argmax(&p), 1);
    }

    #[test]
    fn one_hot_weights_select_a_member() {
        let p = combine(&[vec![0.6, 0.4], vec![0.2, 0.8]], &[0.0, 2.5]);
        assert_eq!(p, vec![0.2, 0.8]);
    }

    #[test]
    fn identical_members_are_idempotent() {
        let (x, y) = blobs(10, 3, 3, 1.0, 3);
        let knn = fit(&ModelSpec::new(ModelParams::Knn(KnnParams::default()), 0), &x, &y, 3).unwrap();
        let spec = ModelSpec::new(
            ModelParams::Ensemble(EnsembleParams {
                members: vec![ModelParams::Knn(KnnParams::default()); 3],
                weights: vec![1.0, 2.0, 3.0],
            }),
            0,
        );
        let e = compose_ensemble(&spec, vec![knn.clone(), knn.clone(), knn.clone()]).unwrap();
        for r in x.iter_rows() {
            let a = e.predict_proba(r).unwrap();
            let b = knn.predict_proba(r).unwrap();
            for (u, v) in a.probs().iter().zip(b.probs()) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(EnsembleParams { weights: vec![0.0; 3], ..Default::default() }.validate().is_err());
        assert!(EnsembleParams { weights: vec![1.0; 2], ..Default::default() }.validate().is_err());
        assert!(EnsembleParams { weights: vec![1.0, -1.0, 1.0], ..Default::default() }.validate().is_err());
        let nested = EnsembleParams {
            members: vec![ModelParams::Ensemble(EnsembleParams::default())],
            weights: vec![1.0],
        };
        assert!(nested.validate().is_err());
        assert!(EnsembleParams::default().validate().is_ok());
    }

    #[test]
    fn class_count_mismatch() {
        let (x, y) = blobs(5, 2, 2, 0.5, 1);
        let a = fit(&ModelSpec::new(ModelParams::Rf(RfParams { n_trees: 2, ..Default::default() }), 0), &x, &y, 2).unwrap();
        let b = fit(&ModelSpec::new(ModelParams::Rf(RfParams { n_trees: 2, ..Default::default() }), 0), &x, &y, 3).unwrap();
        assert!(EnsembleModel::new(vec![a, b], vec![1.0, 1.0]).is_err());
    }
}
