use num_complex::Complex64;

use super::fft::{frame_power, next_pow2};
use crate::error::Result;
use crate::signal::{check_framing, frame_count, hann_window, AudioSignal};

/// Per-frame one-sided power spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// `[frames][bins]`, bins = fft_size/2 + 1.
    pub power: Vec<Vec<f64>>,
    /// Frame centre times.
    pub frame_times_s: Vec<f64>,
    pub bin_hz: f64,
    pub fft_size: usize,
}

impl Spectrogram {
    pub fn frame_count(&self) -> usize {
        self.power.len()
    }

    pub fn bin_count(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Centre frequency of each bin.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.bin_count()).map(|k| k as f64 * self.bin_hz).collect()
    }

    /// Average power spectrum over frames.
    pub fn mean_spectrum(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.bin_count()];
        for row in &self.power {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let n = self.power.len().max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

/// Default analysis window for a sample rate: roughly 32 ms rounded up to a
/// power of two (512 at 16 kHz, 2048 at 44.1 kHz); hop is half of it.
pub fn analysis_window(sample_rate_hz: f64) -> (usize, usize) {
    let window = next_pow2((0.032 * sample_rate_hz).round().max(64.0) as usize);
    (window, window / 2)
}

/// Hann-windowed short-time power spectra. Frames are zero-padded to the next
/// power of two.
pub fn stft(x: &AudioSignal, window_size: usize, hop: usize) -> Result<Spectrogram> {
    check_framing(x.len(), window_size, hop)?;
    let fft_size = next_pow2(window_size);
    let window = hann_window(window_size);
    let count = frame_count(x.len(), window_size, hop);
    let sr = x.sample_rate_hz();
    let samples = x.samples();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft_size];
    let mut power = Vec::with_capacity(count);
    let mut times = Vec::with_capacity(count);
    for m in 0..count {
        let start = m * hop;
        power.push(frame_power(&samples[start..start + window_size], &window, &mut scratch));
        times.push((start as f64 + window_size as f64 / 2.0) / sr);
    }
    Ok(Spectrogram {
        power,
        frame_times_s: times,
        bin_hz: sr / fft_size as f64,
        fft_size,
    })
}
