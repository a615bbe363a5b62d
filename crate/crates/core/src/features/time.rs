//! Time-domain features (registry ids 0..=34).

use super::registry::TIME_COUNT;
use super::stats::{is_constant, mean, moments, percentile_sorted, safe_div, std};
use crate::dsp::stft::analysis_window;
use crate::signal::AudioSignal;

/// Fraction of consecutive sample pairs whose sign differs, with zero
/// counted as non-negative.
pub fn zero_crossing_rate(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let changes = x.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
    changes as f64 / (x.len() - 1) as f64
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

fn hjorth(x: &[f64]) -> (f64, f64) {
    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let ddx: Vec<f64> = dx.windows(2).map(|w| w[1] - w[0]).collect();
    let (v0, v1, v2) = (moments(x).0, moments(&dx).0, moments(&ddx).0);
    let mobility = safe_div(v1, v0).sqrt();
    let mobility_d = safe_div(v2, v1).sqrt();
    (mobility, safe_div(mobility_d, mobility))
}

pub fn time_features(x: &AudioSignal) -> [f64; TIME_COUNT] {
    let s = x.samples();
    let n = s.len() as f64;
    let sr = x.sample_rate_hz();
    let mu = mean(s);
    let (var, skew, kurt) = moments(s);
    let sd = var.sqrt();
    let rms_all = rms(s);
    let abs: Vec<f64> = s.iter().map(|v| v.abs()).collect();
    let peak = abs.iter().copied().fold(0.0, f64::max);
    let mav = mean(&abs);
    let sqrt_mean = abs.iter().map(|v| v.sqrt()).sum::<f64>() / n;

    let abs_sum: f64 = abs.iter().sum();
    let centroid_n = safe_div(abs.iter().enumerate().map(|(i, a)| i as f64 * a).sum(), abs_sum);
    let spread_n = safe_div(
        abs.iter()
            .enumerate()
            .map(|(i, a)| (i as f64 - centroid_n).powi(2) * a)
            .sum(),
        abs_sum,
    )
    .sqrt();

    let mut sorted = s.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut abs_sorted = abs.clone();
    abs_sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);

    let energy: f64 = s.iter().map(|v| v * v).sum();

    let (window, hop) = analysis_window(sr);
    let (window, hop) = if s.len() < window { (s.len(), s.len()) } else { (window, hop) };
    let frames: Vec<&[f64]> = (0..=(s.len() - window) / hop)
        .map(|m| &s[m * hop..m * hop + window])
        .collect();
    let frame_rms: Vec<f64> = frames.iter().map(|f| rms(f)).collect();
    let frame_zcr: Vec<f64> = frames.iter().map(|f| zero_crossing_rate(f)).collect();
    let frame_rms_mean = mean(&frame_rms);
    let frame_rms_std = std(&frame_rms);

    let lag1 = if is_constant(s) {
        0.0
    } else {
        let num: f64 = s.windows(2).map(|w| (w[0] - mu) * (w[1] - mu)).sum();
        let den: f64 = s.iter().map(|v| (v - mu) * (v - mu)).sum();
        safe_div(num, den)
    };
    let (mobility, complexity) = hjorth(s);
    let outliers = if sd > 0.0 {
        s.iter().filter(|v| (*v - mu).abs() > 3.0 * sd).count() as f64 / n
    } else {
        0.0
    };
    let tkeo = if s.len() >= 3 {
        mean(&s.windows(3).map(|w| w[1] * w[1] - w[0] * w[2]).collect::<Vec<_>>())
    } else {
        0.0
    };

    [
        mu,
        var,
        sd,
        skew,
        kurt,
        rms_all,
        peak,
        safe_div(peak, rms_all),
        safe_div(rms_all, mav),
        safe_div(peak, mav),
        safe_div(peak, sqrt_mean * sqrt_mean),
        zero_crossing_rate(s),
        centroid_n / sr,
        mav,
        max - min,
        min,
        max,
        percentile_sorted(&sorted, 0.5),
        percentile_sorted(&sorted, 0.75) - percentile_sorted(&sorted, 0.25),
        mean(&s.iter().map(|v| (v - mu).abs()).collect::<Vec<_>>()),
        energy,
        10.0 * (energy / n + 1e-12).log10(),
        frame_rms_mean,
        frame_rms_std,
        super::stats::max(&frame_rms),
        safe_div(frame_rms_std, frame_rms_mean),
        mean(&frame_zcr),
        std(&frame_zcr),
        lag1,
        spread_n / sr,
        mobility,
        complexity,
        percentile_sorted(&abs_sorted, 0.95),
        outliers,
        tkeo,
    ]
}
