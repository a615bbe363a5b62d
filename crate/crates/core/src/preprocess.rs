//! Spectral-subtraction noise reduction.

use num_complex::Complex64;

use crate::dsp::fft::{fft_complex, ifft_complex};
use crate::error::{Error, Result};
use crate::signal::{frame_count, hann_window, AudioSignal};

pub const SUBTRACTION_WINDOW: usize = 2048;
pub const DEFAULT_SPECTRAL_FLOOR: f64 = 0.01;
/// Length of the leading segment used to estimate a noise profile.
pub const NOISE_LEAD_S: f64 = 0.25;

/// One-sided magnitude spectrum of the background noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    magnitude: Vec<f64>,
}

impl NoiseProfile {
    pub fn new(magnitude: Vec<f64>) -> Result<Self> {
        if magnitude.is_empty() {
            return Err(Error::invalid("empty noise profile"));
        }
        if magnitude.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::invalid("noise magnitudes must be finite and non-negative"));
        }
        Ok(Self { magnitude })
    }

    /// All-zero profile matching a given FFT size.
    pub fn silent(fft_size: usize) -> Self {
        Self {
            magnitude: vec![0.0; fft_size / 2 + 1],
        }
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn bin_count(&self) -> usize {
        self.magnitude.len()
    }

    /// Mean Hann-windowed magnitude over the frames contained in the first
    /// `lead_s` seconds (at least one full frame).
    pub fn estimate(x: &AudioSignal, lead_s: f64, fft_size: usize) -> Result<Self> {
        if !fft_size.is_power_of_two() || fft_size < 2 {
            return Err(Error::invalid(format!("FFT size must be a power of two, got {fft_size}")));
        }
        let lead = ((lead_s * x.sample_rate_hz()).round() as usize).max(fft_size);
        if x.len() < lead {
            return Err(Error::TooShort { needed: lead, actual: x.len() });
        }
        let hop = fft_size / 2;
        let window = hann_window(fft_size);
        let frames = frame_count(lead, fft_size, hop);
        let mut acc = vec![0.0; fft_size / 2 + 1];
        for m in 0..frames {
            let spec = windowed_fft(&x.samples()[m * hop..m * hop + fft_size], &window)?;
            for (a, z) in acc.iter_mut().zip(&spec) {
                *a += z.norm();
            }
        }
        acc.iter_mut().for_each(|a| *a /= frames as f64);
        Self::new(acc)
    }
}

/// Spectral-subtraction parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubtractionParams {
    /// Over-subtraction factor, `1 <= alpha <= 3`.
    pub alpha: f64,
    /// Spectral floor as a fraction of the noisy magnitude.
    pub beta: f64,
    /// Analysis FFT size; frames overlap by half.
    pub fft_size: usize,
}

impl SubtractionParams {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            beta: DEFAULT_SPECTRAL_FLOOR,
            fft_size: SUBTRACTION_WINDOW,
        }
    }
}

/// `max(|S| - alpha * |N|, beta * |S|)`.
pub fn subtract_magnitude(noisy: f64, noise: f64, alpha: f64, beta: f64) -> f64 {
    (noisy - alpha * noise).max(beta * noisy)
}

fn windowed_fft(frame: &[f64], window: &[f64]) -> Result<Vec<Complex64>> {
    let buf: Vec<Complex64> = frame
        .iter()
        .zip(window)
        .map(|(v, w)| Complex64::new(v * w, 0.0))
        .collect();
    fft_complex(&buf)
}

/// Spectral subtraction with the default floor and a 2048-point Hann window.
pub fn spectral_subtract(noisy: &AudioSignal, noise: &NoiseProfile, alpha: f64) -> Result<AudioSignal> {
    spectral_subtract_with(noisy, noise, &SubtractionParams::new(alpha))
}

/// Frame, subtract the scaled noise magnitude per bin while keeping the noisy
/// phase, and resynthesize by overlap-add normalized by the summed window.
/// The signal is zero-padded by one hop on each side so every original
/// sample is covered by two frames.
pub fn spectral_subtract_with(
    noisy: &AudioSignal,
    noise: &NoiseProfile,
    params: &SubtractionParams,
) -> Result<AudioSignal> {
    let SubtractionParams { alpha, beta, fft_size } = *params;
    if !(1.0..=3.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [1, 3], got {alpha}")));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::invalid(format!("spectral floor must lie in [0, 1), got {beta}")));
    }
    if !fft_size.is_power_of_two() || fft_size < 2 {
        return Err(Error::invalid(format!("FFT size must be a power of two, got {fft_size}")));
    }
    let bins = fft_size / 2 + 1;
    if noise.bin_count() != bins {
        return Err(Error::LengthMismatch { expected: bins, actual: noise.bin_count() });
    }

    let hop = fft_size / 2;
    let n = noisy.len();
    let frames = (n + hop).div_ceil(hop) + 1;
    let padded_len = (frames - 1) * hop + fft_size;
    let mut padded = vec![0.0; padded_len];
    padded[hop..hop + n].copy_from_slice(noisy.samples());

    let window = hann_window(fft_size);
    let mut out = vec![0.0; padded_len];
    let mut wsum = vec![0.0; padded_len];
    for m in 0..frames {
        let start = m * hop;
        let mut spec = windowed_fft(&padded[start..start + fft_size], &window)?;
        for k in 0..bins {
            let mag = spec[k].norm();
            let clean = subtract_magnitude(mag, noise.magnitude()[k], alpha, beta);
            spec[k] = if mag > 0.0 { spec[k] * (clean / mag) } else { Complex64::new(0.0, 0.0) };
        }
        for k in 1..hop {
            spec[fft_size - k] = spec[k].conj();
        }
        let frame = ifft_complex(&spec)?;
        for i in 0..fft_size {
            out[start + i] += frame[i].re;
            wsum[start + i] += window[i];
        }
    }
    let samples = (hop..hop + n)
        .map(|i| if wsum[i] > 1e-12 { out[i] / wsum[i] } else { 0.0 })
        .collect();
    AudioSignal::new(samples, noisy.sample_rate_hz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, seed: u64) -> AudioSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioSignal::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect(), 16000.0).unwrap()
    }

    #[test]
    fn magnitude_rule() {
        assert_eq!(subtract_magnitude(10.0, 3.0, 1.5, 0.0), 5.5);
        assert_eq!(subtract_magnitude(3.0, 3.0, 1.0, 0.0), 0.0);
        assert_eq!(subtract_magnitude(2.0, 3.0, 2.0, 0.01), 0.02);
    }

    #[test]
    fn zero_profile_is_identity() {
        let x = random_signal(5000, 1);
        let y = spectral_subtract_with(
            &x,
            &NoiseProfile::silent(2048),
            &SubtractionParams { alpha: 2.0, beta: 0.0, fft_size: 2048 },
        )
        .unwrap();
        assert_eq!(y.len(), x.len());
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn matched_profile_cancels() {
        // period 64 divides the 1024-sample hop, so every full frame has the
        // magnitude the profile was estimated from
        let n = 16000;
        let s: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / 64.0).sin())
            .collect();
        let x = AudioSignal::new(s, 16000.0).unwrap();
        let profile = NoiseProfile::estimate(&x, 0.25, 2048).unwrap();
        let params = SubtractionParams { alpha: 1.0, beta: 0.0, fft_size: 2048 };
        let y = spectral_subtract_with(&x, &profile, &params).unwrap();
        // samples whose two covering frames lie fully inside the signal
        for v in &y.samples()[2048..n - 3072] {
            assert!(v.abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn argument_checks() {
        let x = random_signal(4096, 2);
        let p = NoiseProfile::silent(2048);
        assert!(spectral_subtract(&x, &p, 0.5).is_err());
        assert!(spectral_subtract(&x, &p, 3.5).is_err());
        assert!(matches!(
            spectral_subtract(&x, &NoiseProfile::silent(1024), 1.5),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(NoiseProfile::new(vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn reduces_stationary_noise() {
        let sr = 16000.0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise: Vec<f64> = (0..32000).map(|_| 0.1 * rng.random_range(-1.0..1.0)).collect();
        let tone: Vec<f64> = (0..32000)
            .map(|i| if i < 4000 { 0.0 } else { (2.0 * std::f64::consts::PI * 440.0 * i as f64 / sr).sin() })
            .collect();
        let mixed: Vec<f64> = tone.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let x = AudioSignal::new(mixed.clone(), sr).unwrap();
        let profile = NoiseProfile::estimate(&x, 0.25, 2048).unwrap();
        let y = spectral_subtract(&x, &profile, 2.0).unwrap();
        let err = |v: &[f64]| -> f64 {
            v.iter().zip(&tone).skip(8000).map(|(a, b)| (a - b).powi(2)).sum()
        };
        assert!(err(y.samples()) < 0.5 * err(&mixed));
    }
}
