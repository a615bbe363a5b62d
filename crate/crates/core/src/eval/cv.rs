//! Stratified fold assignment with optional hold-out and validation carving.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSettings {
    pub n_folds: usize,
    /// Fraction of the whole corpus held out for final testing.
    pub holdout_fraction: f64,
    /// Fraction of the whole corpus reserved for validation.
    pub validation_fraction: f64,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self { n_folds: 5, holdout_fraction: 0.2, validation_fraction: 0.1 }
    }
}

impl CvSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(Error::Config(format!("cv: n_folds must be at least 2, got {}", self.n_folds)));
        }
        let (h, v) = (self.holdout_fraction, self.validation_fraction);
        if !(0.0..1.0).contains(&h) || !(0.0..1.0).contains(&v) || h + v >= 1.0 {
            return Err(Error::Config(format!(
                "cv: hold-out ({h}) and validation ({v}) fractions must be in [0, 1) with sum below 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    /// Fold of each sample; `None` for hold-out and validation samples.
    pub fold_assignments: Vec<Option<usize>>,
    pub n_folds: usize,
    pub holdout_mask: Vec<bool>,
    pub validation_mask: Vec<bool>,
    pub seed: u64,
}

impl CvPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_assignments.len()).filter(|&i| self.fold_assignments[i] == Some(fold)).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_assignments.len())
            .filter(|&i| matches!(self.fold_assignments[i], Some(f) if f != fold))
            .collect()
    }

    /// Every sample that takes part in cross-validation.
    pub fn pool_indices(&self) -> Vec<usize> {
        (0..self.fold_assignments.len()).filter(|&i| self.fold_assignments[i].is_some()).collect()
    }

    pub fn holdout_indices(&self) -> Vec<usize> {
        (0..self.holdout_mask.len()).filter(|&i| self.holdout_mask[i]).collect()
    }

    pub fn validation_indices(&self) -> Vec<usize> {
        (0..self.validation_mask.len()).filter(|&i| self.validation_mask[i]).collect()
    }
}

/// Per class: seeded shuffle, take the hold-out share, then the validation
/// share, then deal the rest round-robin over the folds. The round-robin
/// counter carries over between classes so fold sizes stay within one sample.
pub fn plan(y: &[usize], settings: &CvSettings, seed: u64) -> Result<CvPlan> {
    settings.validate()?;
    let n = y.len();
    if n == 0 {
        return Err(Error::invalid("cannot plan folds for an empty label vector"));
    }
    let classes = y.iter().max().map_or(0, |m| m + 1);
    let mut fold_assignments = vec![None; n];
    let mut holdout_mask = vec![false; n];
    let mut validation_mask = vec![false; n];
    let mut counter = 0;
    for c in 0..classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| y[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        members.shuffle(&mut rng_from_seed(derive_seed(seed, "cv-class", c as u64)));
        let m = members.len();
        let n_hold = (m as f64 * settings.holdout_fraction).round() as usize;
        let n_val = (m as f64 * settings.validation_fraction).round() as usize;
        let rest = m.saturating_sub(n_hold + n_val);
        if rest < settings.n_folds {
            return Err(Error::invalid(format!(
                "class {c} has {rest} samples left for cross-validation, fewer than {} folds",
                settings.n_folds
            )));
        }
        for &i in &members[..n_hold] {
            holdout_mask[i] = true;
        }
        for &i in &members[n_hold..n_hold + n_val] {
            validation_mask[i] = true;
        }
        for &i in &members[n_hold + n_val..] {
            fold_assignments[i] = Some(counter % settings.n_folds);
            counter += 1;
        }
    }
    Ok(CvPlan { fold_assignments, n_folds: settings.n_folds, holdout_mask, validation_mask, seed })
}

/// Plain stratified k-fold over all samples.
pub fn stratified_kfold(y: &[usize], n_folds: usize, seed: u64) -> Result<CvPlan> {
    plan(y, &CvSettings { n_folds, holdout_fraction: 0.0, validation_fraction: 0.0 }, seed)
}
