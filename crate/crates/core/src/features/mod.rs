//! The 127-feature descriptor: registry, the three extractor groups and
//! per-feature standardization.

mod analysis;
pub mod registry;
pub mod scaler;
pub mod spectral;
pub mod stats;
pub mod time;
pub mod timefreq;

use rayon::prelude::*;

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::signal::AudioSignal;

pub use registry::{Domain, FeatureInfo, FeatureRegistry, FEATURE_COUNT, REGISTRY_VERSION};
pub use scaler::{standardize, Standardizer};
pub use spectral::freq_features;
pub use time::time_features;
pub use timefreq::timefreq_features;

/// Ordered 127-value descriptor of one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    registry_version: &'static str,
}

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn registry_version(&self) -> &'static str {
        self.registry_version
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FeatureRegistry.by_name(name).map(|e| self.values[e.id])
    }
}

/// Time, frequency and time-frequency groups concatenated in registry order.
pub fn extract_all(x: &AudioSignal) -> Result<FeatureVector> {
    let a = analysis::Analysis::new(x)?;
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    values.extend(time::time_features(x));
    values.extend(spectral::from_analysis(&a));
    values.extend(timefreq::from_analysis(x, &a)?);
    debug_assert_eq!(values.len(), FEATURE_COUNT);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        let name = FeatureRegistry.get(i).map_or("?", |e| e.name);
        return Err(Error::degenerate(format!("feature {i} ({name}) is not finite")));
    }
    Ok(FeatureVector {
        values,
        registry_version: REGISTRY_VERSION,
    })
}

/// Extract every signal in parallel; row `i` of the result belongs to
/// `signals[i]` regardless of scheduling.
pub fn extract_batch(signals: &[AudioSignal]) -> Result<FeatureMatrix> {
    let rows = signals
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            extract_all(s)
                .map(FeatureVector::into_values)
                .map_err(|e| Error::InvalidArgument(format!("signal {i}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::from_rows(rows, FEATURE_COUNT)
}
