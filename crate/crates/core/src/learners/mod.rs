//! The six classifiers and the soft-voting ensemble behind one
//! train / predict-proba contract.
//!
//! Every learner consumes a standardized [`FeatureMatrix`] and integer labels
//! in `0..class_count`. Fitted models are immutable and can be shared across
//! threads for prediction.

pub mod ensemble;
pub mod gbt;
pub mod knn;
pub mod mlp;
pub mod rf;
pub mod svm;
mod timing;

use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::features::REGISTRY_VERSION;
use crate::rng::derive_seed;

pub use ensemble::{EnsembleModel, EnsembleParams};
pub use gbt::{GbtModel, GbtParams};
pub use knn::{Distance, KnnModel, KnnParams};
pub use mlp::{Activation, MlpModel, MlpParams};
pub use rf::{RandomForest, RfParams};
pub use svm::{Kernel, SvmModel, SvmParams};
pub use timing::{measure_timing, Timing};

/// Saved-model format tag. Bumped on any incompatible change.
pub const MODEL_FORMAT: &str = "condmon-model-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Knn,
    Svm,
    Rf,
    Gbt,
    Mlp,
    Ensemble,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Knn => "KNN",
            ModelKind::Svm => "SVM",
            ModelKind::Rf => "RF",
            ModelKind::Gbt => "GBT",
            ModelKind::Mlp => "MLP",
            ModelKind::Ensemble => "Ensemble",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Kind-specific hyperparameters; the TOML/JSON form is tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Knn(KnnParams),
    Svm(SvmParams),
    Rf(RfParams),
    Gbt(GbtParams),
    Mlp(MlpParams),
    Ensemble(EnsembleParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Knn(_) => ModelKind::Knn,
            ModelParams::Svm(_) => ModelKind::Svm,
            ModelParams::Rf(_) => ModelKind::Rf,
            ModelParams::Gbt(_) => ModelKind::Gbt,
            ModelParams::Mlp(_) => ModelKind::Mlp,
            ModelParams::Ensemble(_) => ModelKind::Ensemble,
        }
    }

    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Knn => ModelParams::Knn(KnnParams::default()),
            ModelKind::Svm => ModelParams::Svm(SvmParams::default()),
            ModelKind::Rf => ModelParams::Rf(RfParams::default()),
            ModelKind::Gbt => ModelParams::Gbt(GbtParams::default()),
            ModelKind::Mlp => ModelParams::Mlp(MlpParams::default()),
            ModelKind::Ensemble => ModelParams::Ensemble(EnsembleParams::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Knn(p) => p.validate(),
            ModelParams::Svm(p) => p.validate(),
            ModelParams::Rf(p) => p.validate(),
            ModelParams::Gbt(p) => p.validate(),
            ModelParams::Mlp(p) => p.validate(),
            ModelParams::Ensemble(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub params: ModelParams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(params: ModelParams, seed: u64) -> Self {
        Self { params, seed }
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }
}

/// Class-probability output: entries in `[0, 1]` summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("empty probability vector"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid(format!("probability outside [0, 1]: {probs:?}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {s}")));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}

pub(crate) fn check_training(x: &FeatureMatrix, y: &[usize], class_count: usize) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::invalid("empty training set"));
    }
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch { expected: x.rows(), actual: y.len() });
    }
    if class_count == 0 {
        return Err(Error::invalid("class count must be positive"));
    }
    if let Some(&l) = y.iter().find(|&&l| l >= class_count) {
        return Err(Error::invalid(format!("label {l} out of range for {class_count} classes")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Fitted {
    Knn(KnnModel),
    Svm(SvmModel),
    Rf(RandomForest),
    Gbt(GbtModel),
    Mlp(MlpModel),
    Ensemble(EnsembleModel),
}

impl Fitted {
    fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        match self {
            Fitted::Knn(m) => m.predict_proba(row),
            Fitted::Svm(m) => m.predict_proba(row),
            Fitted::Rf(m) => m.predict_proba(row),
            Fitted::Gbt(m) => m.predict_proba(row),
            Fitted::Mlp(m) => m.predict_proba(row),
            Fitted::Ensemble(m) => m.predict_proba(row),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub spec: ModelSpec,
    pub model: Fitted,
    pub class_count: usize,
    pub n_features: usize,
    pub training_seconds: f64,
    pub registry_version: String,
}

#[derive(Serialize, Deserialize)]
struct SavedModel {
    format: String,
    model: TrainedModel,
}

impl TrainedModel {
    fn wrap(spec: &ModelSpec, model: Fitted, class_count: usize, n_features: usize, seconds: f64) -> Self {
        Self {
            kind: spec.kind(),
            spec: spec.clone(),
            model,
            class_count,
            n_features,
            training_seconds: seconds,
            registry_version: REGISTRY_VERSION.to_string(),
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        ProbabilityVector::new(self.predict_proba_raw(row)?)
    }

    fn predict_proba_raw(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features {
            return Err(Error::LengthMismatch { expected: self.n_features, actual: row.len() });
        }
        Ok(self.model.predict_proba(row))
    }

    pub(crate) fn model_proba(&self, row: &[f64]) -> Vec<f64> {
        self.model.predict_proba(row)
    }

    pub fn predict_proba_matrix(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        x.iter_rows().map(|r| self.predict_proba_raw(r)).collect()
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        Ok(self.predict_proba_matrix(x)?.iter().map(|p| argmax(p)).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let saved = SavedModel { format: MODEL_FORMAT.to_string(), model: self.clone() };
        serde_json::to_string(&saved).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let saved: SavedModel = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if saved.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!(
                "unsupported model format {:?}, expected {MODEL_FORMAT:?}",
                saved.format
            )));
        }
        Ok(saved.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Fit any model kind. Ensemble members get seeds derived from `spec.seed`.
pub fn fit(spec: &ModelSpec, x: &FeatureMatrix, y: &[usize], class_count: usize) -> Result<TrainedModel> {
    spec.params.validate()?;
    check_training(x, y, class_count)?;
    if let ModelParams::Ensemble(p) = &spec.params {
        let start = Instant::now();
        let members = p
            .members
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let s = ModelSpec::new(m.clone(), derive_seed(spec.seed, "member", i as u64));
                fit(&s, x, y, class_count)
            })
            .collect::<Result<Vec<_>>>()?;
        let model = EnsembleModel::new(members, p.weights.clone())?;
        let secs = start.elapsed().as_secs_f64();
        return Ok(TrainedModel::wrap(spec, Fitted::Ensemble(model), class_count, x.cols(), secs));
    }
    let start = Instant::now();
    let fitted = match &spec.params {
        ModelParams::Knn(p) => Fitted::Knn(KnnModel::fit(p, x, y, class_count)?),
        ModelParams::Svm(p) => Fitted::Svm(SvmModel::fit(p, x, y, class_count, spec.seed)?),
        ModelParams::Rf(p) => Fitted::Rf(RandomForest::fit(p, x, y, class_count, spec.seed)?),
        ModelParams::Gbt(p) => Fitted::Gbt(GbtModel::fit(p, x, y, class_count, spec.seed)?),
        ModelParams::Mlp(p) => Fitted::Mlp(MlpModel::fit(p, x, y, class_count, spec.seed)?),
        ModelParams::Ensemble(_) => unreachable!(),
    };
    let secs = start.elapsed().as_secs_f64();
    Ok(TrainedModel::wrap(spec, fitted, class_count, x.cols(), secs))
}

/// Assemble an ensemble from already fitted members.
pub fn compose_ensemble(spec: &ModelSpec, members: Vec<TrainedModel>) -> Result<TrainedModel> {
    let ModelParams::Ensemble(p) = &spec.params else {
        return Err(Error::invalid("compose_ensemble needs an ensemble spec"));
    };
    let first = members.first().ok_or_else(|| Error::invalid("ensemble has no members"))?;
    let (c, f) = (first.class_count, first.n_features);
    let secs = members.iter().map(|m| m.training_seconds).sum();
    let model = EnsembleModel::new(members, p.weights.clone())?;
    Ok(TrainedModel::wrap(spec, Fitted::Ensemble(model), c, f, secs))
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng as _;
    use rand_distr::{Distribution, StandardNormal};

    /// Gaussian blobs around well separated centres.
    pub fn blobs(n_per: usize, classes: usize, dims: usize, spread: f64, seed: u64) -> (FeatureMatrix, Vec<usize>) {
        let mut rng = crate::rng::rng_from_seed(seed);
        let centres: Vec<Vec<f64>> =
            (0..classes).map(|_| (0..dims).map(|_| rng.random_range(-4.0..4.0)).collect()).collect();
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (c, centre) in centres.iter().enumerate() {
            for _ in 0..n_per {
                rows.push(
                    centre
                        .iter()
                        .map(|m| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            m + spread * z
                        })
                        .collect(),
                );
                y.push(c);
            }
        }
        (FeatureMatrix::from_rows(rows, dims).unwrap(), y)
    }

    pub fn accuracy(pred: &[usize], y: &[usize]) -> f64 {
        pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
    }

    pub fn assert_valid_probs(p: &[f64], classes: usize) {
        assert_eq!(p.len(), classes);
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)), "{p:?}");
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{p:?}");
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn probability_vector_checks() {
        assert!(ProbabilityVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn every_kind_round_trips_through_json() {
        let (x, y) = blobs(15, 3, 4, 0.5, 1);
        for kind in [ModelKind::Knn, ModelKind::Svm, ModelKind::Rf, ModelKind::Gbt, ModelKind::Mlp, ModelKind::Ensemble] {
            let mut params = ModelParams::default_for(kind);
            if let ModelParams::Rf(p) = &mut params {
                p.n_trees = 5;
            }
            if let ModelParams::Mlp(p) = &mut params {
                p.epochs = 5;
            }
            let m = fit(&ModelSpec::new(params, 3), &x, &y, 3).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back.predict_proba_matrix(&x).unwrap(), m.predict_proba_matrix(&x).unwrap(), "{kind}");
            assert_eq!(back.kind, kind);
        }
    }

    #[test]
    fn rejects_wrong_format_tag() {
        let (x, y) = blobs(5, 2, 2, 0.5, 1);
        let m = fit(&ModelSpec::new(ModelParams::default_for(ModelKind::Knn), 0), &x, &y, 2).unwrap();
        let text = m.to_json().unwrap().replace(MODEL_FORMAT, "something-else");
        assert!(matches!(TrainedModel::from_json(&text), Err(Error::ModelFormat(_))));
        assert!(m.predict_proba(&[0.0]).is_err());
    }
}
