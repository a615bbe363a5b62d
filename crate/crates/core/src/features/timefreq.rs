//! Time-frequency features (registry ids 80..=126): trajectories of
//! per-frame spectral statistics and wavelet subband descriptors.

use super::analysis::Analysis;
use super::registry::TIMEFREQ_COUNT;
use super::stats::{is_constant, kurtosis, max, mean, safe_div, spectral_contrast, spectral_shape, std};
use crate::dsp::fft::{fft, next_pow2, power_spectrum};
use crate::dsp::wavelet::{dwt, energies_of, DEFAULT_LEVELS};
use crate::error::{Error, Result};
use crate::signal::AudioSignal;

pub fn timefreq_features(x: &AudioSignal) -> Result<[f64; TIMEFREQ_COUNT]> {
    let a = Analysis::new(x)?;
    from_analysis(x, &a)
}

fn summary(v: &[f64]) -> [f64; 3] {
    if v.is_empty() {
        [0.0; 3]
    } else {
        [mean(v), std(v), max(v)]
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    if is_constant(a) || is_constant(b) {
        return 0.0;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    safe_div(num, (da * db).sqrt())
}

/// Strongest non-DC frequency of the mean-removed frame-energy envelope.
fn modulation_peak(energy: &[f64], frame_rate_hz: f64) -> f64 {
    if energy.len() < 4 || is_constant(energy) {
        return 0.0;
    }
    let m = mean(energy);
    let n = next_pow2(energy.len());
    let mut buf: Vec<f64> = energy.iter().map(|e| e - m).collect();
    buf.resize(n, 0.0);
    let Ok(spec) = fft(&buf, frame_rate_hz) else {
        return 0.0;
    };
    let p = power_spectrum(&spec);
    let mut best = 1;
    for k in 2..p.len() {
        if p[k] > p[best] {
            best = k;
        }
    }
    best as f64 * spec.bin_hz()
}

pub(crate) fn from_analysis(x: &AudioSignal, a: &Analysis) -> Result<[f64; TIMEFREQ_COUNT]> {
    let needed = 1usize << DEFAULT_LEVELS;
    if x.len() < needed {
        return Err(Error::TooShort { needed, actual: x.len() });
    }
    let spec = &a.spectrogram;
    let nyquist = a.sample_rate_hz / 2.0;
    let high_start = a.freqs.iter().position(|&f| f >= nyquist / 2.0).unwrap_or(a.freqs.len());

    let mut centroid = Vec::new();
    let mut bandwidth = Vec::new();
    let mut rolloff = Vec::new();
    let mut flatness = Vec::new();
    let mut contrast = Vec::new();
    let mut entropy = Vec::new();
    let mut dominant = Vec::new();
    let mut energy = Vec::new();
    let mut high_ratio = Vec::new();
    for row in &spec.power {
        let s = spectral_shape(row, &a.freqs);
        centroid.push(s.centroid);
        bandwidth.push(s.bandwidth);
        rolloff.push(s.rolloff);
        flatness.push(s.flatness);
        entropy.push(s.entropy);
        dominant.push(s.dominant);
        contrast.push(spectral_contrast(row));
        let total: f64 = row.iter().sum();
        energy.push(total);
        high_ratio.push(safe_div(row[high_start..].iter().sum(), total));
    }
    let stationarity = if spec.power.len() > 1 {
        mean(&spec.power.windows(2).map(|w| pearson(&w[0], &w[1])).collect::<Vec<_>>())
    } else {
        0.0
    };

    let coeffs = dwt(x.samples(), DEFAULT_LEVELS)?;
    let wd = energies_of(&coeffs, x.samples());
    let bands = wd.band_energies();
    let band_total: f64 = bands.iter().sum();
    let relative: Vec<f64> = bands.iter().map(|e| safe_div(*e, band_total)).collect();
    let wavelet_entropy = -relative
        .iter()
        .filter(|&&r| r > 0.0)
        .map(|r| r * r.ln())
        .sum::<f64>();
    let detail_total: f64 = wd.detail_energies.iter().sum();
    let log_ratio = if band_total > 0.0 {
        let floor = 1e-12 * band_total;
        ((detail_total + floor) / (wd.approx_energy + floor)).log10()
    } else {
        0.0
    };
    let energy_centroid = safe_div(
        bands.iter().enumerate().map(|(i, e)| (i + 1) as f64 * e).sum(),
        band_total,
    );

    let frame_rate = a.sample_rate_hz / (spec.fft_size / 2) as f64;
    let energy_mean = mean(&energy);
    let energy_std = std(&energy);

    let mut out = Vec::with_capacity(TIMEFREQ_COUNT);
    for series in [&centroid, &bandwidth, &rolloff, &flatness, &a.flux] {
        out.extend(summary(series));
    }
    out.extend(&bands);
    out.extend(&relative);
    out.push(wavelet_entropy);
    out.extend([mean(&contrast), std(&contrast)]);
    out.extend([mean(&entropy), std(&entropy)]);
    out.extend([mean(&dominant), std(&dominant)]);
    out.extend([energy_mean, energy_std, max(&energy)]);
    out.push(safe_div(energy_std, energy_mean));
    out.push(kurtosis(&energy));
    out.push(modulation_peak(&energy, frame_rate));
    out.push(stationarity);
    out.extend([mean(&high_ratio), std(&high_ratio)]);
    out.push(log_ratio);
    out.push(energy_centroid);
    out.push(kurtosis(&coeffs.details[0]));
    out.push(kurtosis(&coeffs.details[1]));

    let mut fixed = [0.0; TIMEFREQ_COUNT];
    fixed.copy_from_slice(&out);
    Ok(fixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::wavelet::dwt_energies;
    use crate::features::registry::FeatureRegistry;

    fn local(name: &str) -> usize {
        FeatureRegistry.by_name(name).unwrap().id - 80
    }

    fn tone(freq: f64) -> AudioSignal {
        let sr = 16000.0;
        AudioSignal::new(
            (0..16000).map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / sr).sin()).collect(),
            sr,
        )
        .unwrap()
    }

    #[test]
    fn zero_signal_is_all_zero() {
        let x = AudioSignal::new(vec![0.0; 4000], 16000.0).unwrap();
        let f = timefreq_features(&x).unwrap();
        assert!(f.iter().all(|&v| v == 0.0), "{f:?}");
    }

    #[test]
    fn d4_passthrough() {
        let x = tone(700.0);
        let f = timefreq_features(&x).unwrap();
        let d = dwt_energies(&x, 5).unwrap();
        assert_eq!(f[local("Wavelet energy (D4)")], d.detail_energies[3]);
    }

    #[test]
    fn stationary_centroid_trajectory() {
        let x = tone(750.0);
        let f = timefreq_features(&x).unwrap();
        let m = f[local("Centroid Trajectory Mean")];
        let s = f[local("Centroid Trajectory Std")];
        assert!(s < 1e-3 * m, "std {s} mean {m}");
        // recompute the trajectory straight from the spectrogram
        let spec = crate::dsp::stft::stft(&x, 512, 256).unwrap();
        let freqs = spec.frequencies();
        let traj: Vec<f64> = spec
            .power
            .iter()
            .map(|row| {
                let tot: f64 = row.iter().sum();
                row.iter().zip(&freqs).map(|(p, f)| p * f).sum::<f64>() / tot
            })
            .collect();
        assert!((mean(&traj) - m).abs() < 1e-9 * m);
    }

    #[test]
    fn relative_energies_sum_to_one() {
        let f = timefreq_features(&tone(300.0)).unwrap();
        let start = local("Relative Wavelet Energy (D1)");
        let sum: f64 = f[start..start + 6].iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
