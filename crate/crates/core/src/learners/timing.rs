use std::time::Instant;

use super::{fit, ModelSpec};
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// Wall-clock medians over repeated fits and prediction passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub training_seconds: f64,
    pub prediction_ms_per_sample: f64,
    /// Coefficient of variation of the repeated measurements.
    pub training_cv: f64,
    pub prediction_cv: f64,
    pub repetitions: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn coefficient_of_variation(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if m == 0.0 {
        return 0.0;
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    var.sqrt() / m
}

/// Elapsed seconds, never reported as exactly zero.
fn seconds_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64().max(1e-9)
}

pub fn measure_timing(
    spec: &ModelSpec,
    x: &FeatureMatrix,
    y: &[usize],
    class_count: usize,
    queries: &FeatureMatrix,
    repetitions: usize,
) -> Result<Timing> {
    if repetitions < 3 {
        return Err(Error::invalid(format!("timing needs at least 3 repetitions, got {repetitions}")));
    }
    if queries.rows() == 0 {
        return Err(Error::invalid("timing needs at least one query row"));
    }
    let mut train = Vec::with_capacity(repetitions);
    let mut predict = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let t = Instant::now();
        let model = fit(spec, x, y, class_count)?;
        train.push(seconds_since(t));
        let t = Instant::now();
        std::hint::black_box(model.predict_proba_matrix(queries)?);
        predict.push(seconds_since(t) * 1000.0 / queries.rows() as f64);
    }
    let (training_cv, prediction_cv) = (coefficient_of_variation(&train), coefficient_of_variation(&predict));
    Ok(Timing {
        training_seconds: median(&mut train),
        prediction_ms_per_sample: median(&mut predict),
        training_cv,
        prediction_cv,
        repetitions,
    })
}
