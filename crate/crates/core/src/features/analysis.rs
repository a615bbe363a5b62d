use crate::dsp::mel::{mfcc_frames, DEFAULT_MEL_FILTERS, DEFAULT_MFCC_COEFFS};
use crate::dsp::stft::{analysis_window, stft, Spectrogram};
use crate::error::Result;
use crate::signal::AudioSignal;

use super::stats::flux_series;

/// Intermediate representations shared by the frequency and
/// time-frequency extractors so the STFT is computed once per signal.
pub(crate) struct Analysis {
    pub spectrogram: Spectrogram,
    pub freqs: Vec<f64>,
    pub mfcc: Vec<Vec<f64>>,
    pub flux: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl Analysis {
    pub fn new(x: &AudioSignal) -> Result<Self> {
        let sr = x.sample_rate_hz();
        let (window, hop) = analysis_window(sr);
        let spectrogram = stft(x, window, hop)?;
        let mfcc = mfcc_frames(&spectrogram, sr, DEFAULT_MEL_FILTERS, DEFAULT_MFCC_COEFFS)?;
        let flux = flux_series(&spectrogram.power);
        Ok(Self {
            freqs: spectrogram.frequencies(),
            spectrogram,
            mfcc,
            flux,
            sample_rate_hz: sr,
        })
    }
}
