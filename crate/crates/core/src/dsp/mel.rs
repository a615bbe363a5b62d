//! Mel filterbank and cepstral coefficients.

use super::stft::{analysis_window, stft, Spectrogram};
use crate::error::{Error, Result};
use crate::signal::AudioSignal;

pub const DEFAULT_MEL_FILTERS: usize = 26;
pub const DEFAULT_MFCC_COEFFS: usize = 13;
/// Floor applied to filter energies before the log.
pub const LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale, evaluated at the
/// centre frequency of each one-sided FFT bin.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Vec<Vec<f64>>,
}

impl MelFilterbank {
    pub fn new(
        n_filters: usize,
        fft_size: usize,
        sample_rate_hz: f64,
        fmin_hz: f64,
        fmax_hz: f64,
    ) -> Result<Self> {
        if n_filters == 0 || fft_size < 2 {
            return Err(Error::invalid("filterbank needs at least one filter and an FFT size >= 2"));
        }
        if !(fmin_hz >= 0.0 && fmax_hz > fmin_hz) {
            return Err(Error::invalid(format!("bad filterbank range {fmin_hz}..{fmax_hz} Hz")));
        }
        let (mlo, mhi) = (hz_to_mel(fmin_hz), hz_to_mel(fmax_hz));
        let edges: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (n_filters + 1) as f64))
            .collect();
        let bins = fft_size / 2 + 1;
        let bin_hz = sample_rate_hz / fft_size as f64;
        let weights = (0..n_filters)
            .map(|m| {
                let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        let rise = (f - lo) / (c - lo);
                        let fall = (hi - f) / (hi - c);
                        rise.min(fall).max(0.0)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { weights })
    }

    /// Filters spanning 0 Hz to Nyquist.
    pub fn full_band(n_filters: usize, fft_size: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(n_filters, fft_size, sample_rate_hz, 0.0, sample_rate_hz / 2.0)
    }

    pub fn n_filters(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.iter().zip(power).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Orthonormal DCT-II, first `n_out` coefficients.
pub fn dct2_orthonormal(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        v * (std::f64::consts::PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)).cos()
                    })
                    .sum::<f64>()
        })
        .collect()
}

/// Cepstrum of one power frame: filterbank, floored natural log, DCT-II.
pub fn cepstrum(power: &[f64], bank: &MelFilterbank, n_coeffs: usize) -> Vec<f64> {
    let logs: Vec<f64> = bank
        .apply(power)
        .into_iter()
        .map(|e| e.max(LOG_FLOOR).ln())
        .collect();
    dct2_orthonormal(&logs, n_coeffs)
}

/// Per-frame MFCCs of a spectrogram, `[frames][n_coeffs]`.
pub fn mfcc_frames(spec: &Spectrogram, sample_rate_hz: f64, n_filters: usize, n_coeffs: usize) -> Result<Vec<Vec<f64>>> {
    if n_coeffs == 0 || n_coeffs > n_filters {
        return Err(Error::invalid(format!(
            "need 1..={n_filters} coefficients, got {n_coeffs}"
        )));
    }
    let bank = MelFilterbank::full_band(n_filters, spec.fft_size, sample_rate_hz)?;
    Ok(spec
        .power
        .iter()
        .map(|p| cepstrum(p, &bank, n_coeffs))
        .collect())
}

/// Mean and standard deviation over frames of each coefficient.
pub fn frame_mean_std(frames: &[Vec<f64>], n: usize) -> (Vec<f64>, Vec<f64>) {
    let count = frames.len().max(1) as f64;
    let mut mean = vec![0.0; n];
    for f in frames {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; n];
    for f in frames {
        for ((s, v), m) in var.iter_mut().zip(f).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|s| (s / count).sqrt()).collect();
    (mean, std)
}

/// Frame-averaged MFCCs using the default analysis window and 26 filters.
pub fn mfcc(x: &AudioSignal, n_coeffs: usize) -> Result<Vec<f64>> {
    let (window, hop) = analysis_window(x.sample_rate_hz());
    mfcc_with(x, window, hop, DEFAULT_MEL_FILTERS, n_coeffs)
}

pub fn mfcc_with(
    x: &AudioSignal,
    window: usize,
    hop: usize,
    n_filters: usize,
    n_coeffs: usize,
) -> Result<Vec<f64>> {
    let spec = stft(x, window, hop)?;
    let frames = mfcc_frames(&spec, x.sample_rate_hz(), n_filters, n_coeffs)?;
    Ok(frame_mean_std(&frames, n_coeffs).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> AudioSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioSignal::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect(), 16000.0).unwrap()
    }

    #[test]
    fn mel_round_trip() {
        for hz in [0.0, 100.0, 1000.0, 7999.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn output_length_and_determinism() {
        let x = noise(4000, 1);
        let a = mfcc(&x, 13).unwrap();
        let b = mfcc(&x, 13).unwrap();
        assert_eq!(a.len(), 13);
        assert_eq!(a, b);
        assert_eq!(mfcc(&x, 5).unwrap().len(), 5);
        assert!(mfcc(&x, 0).is_err());
    }

    #[test]
    fn too_short_signal() {
        assert!(mfcc(&noise(100, 2), 13).is_err());
    }

    #[test]
    fn scaling_moves_only_c0() {
        let x = noise(4000, 7);
        let y = AudioSignal::new(x.samples().iter().map(|v| 2.0 * v).collect(), 16000.0).unwrap();
        let a = mfcc(&x, 13).unwrap();
        let b = mfcc(&y, 13).unwrap();
        // power scales by 4; every log filter energy shifts by ln 4, which the
        // orthonormal DCT maps to ln(4) * sqrt(26) on c0 and zero elsewhere
        let expected_shift = 4f64.ln() * (DEFAULT_MEL_FILTERS as f64).sqrt();
        assert!((b[0] - a[0] - expected_shift).abs() < 1e-9);
        for k in 1..13 {
            assert!((a[k] - b[k]).abs() < 1e-9, "c{k}: {} vs {}", a[k], b[k]);
        }
    }

    #[test]
    fn tiny_case_matches_hand_evaluation() {
        // one 64-sample frame, 8 filters, 4 coefficients
        let sr = 8000.0;
        let x: Vec<f64> = (0..64).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
        let sig = AudioSignal::new(x.clone(), sr).unwrap();
        let got = mfcc_with(&sig, 64, 64, 8, 4).unwrap();

        let pi = std::f64::consts::PI;
        let win: Vec<f64> = (0..64).map(|i| 0.5 - 0.5 * (2.0 * pi * i as f64 / 64.0).cos()).collect();
        let power: Vec<f64> = (0..=32)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for t in 0..64 {
                    let a = -2.0 * pi * (k * t) as f64 / 64.0;
                    re += x[t] * win[t] * a.cos();
                    im += x[t] * win[t] * a.sin();
                }
                re * re + im * im
            })
            .collect();
        let top = 2595.0 * (1.0 + 4000.0 / 700.0f64).log10();
        let hz: Vec<f64> = (0..10)
            .map(|i| 700.0 * (10f64.powf(top * i as f64 / 9.0 / 2595.0) - 1.0))
            .collect();
        let mut logs = [0.0; 8];
        for m in 0..8 {
            let mut e = 0.0;
            for (k, p) in power.iter().enumerate() {
                let f = k as f64 * 125.0;
                let w = if f >= hz[m] && f <= hz[m + 1] {
                    (f - hz[m]) / (hz[m + 1] - hz[m])
                } else if f > hz[m + 1] && f <= hz[m + 2] {
                    (hz[m + 2] - f) / (hz[m + 2] - hz[m + 1])
                } else {
                    0.0
                };
                e += w * p;
            }
            logs[m] = e.max(1e-10).ln();
        }
        for (k, g) in got.iter().enumerate() {
            let s = if k == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
            let c: f64 = (0..8)
                .map(|n| logs[n] * (pi * k as f64 * (2 * n + 1) as f64 / 16.0).cos())
                .sum::<f64>()
                * s;
            assert!((g - c).abs() < 1e-9, "coef {k}: {g} vs {c}");
        }
    }
}
