//! Frequency-domain features (registry ids 35..=79), computed on the
//! frame-averaged power spectrum of the default analysis STFT.

use super::analysis::Analysis;
use super::registry::FREQ_COUNT;
use super::stats::{mean, octave_band_ratios, spectral_contrast, spectral_shape};
use crate::dsp::chroma::chroma_mean;
use crate::dsp::mel::{frame_mean_std, DEFAULT_MFCC_COEFFS};
use crate::error::Result;
use crate::signal::AudioSignal;

pub fn freq_features(x: &AudioSignal) -> Result<[f64; FREQ_COUNT]> {
    Ok(from_analysis(&Analysis::new(x)?))
}

pub(crate) fn from_analysis(a: &Analysis) -> [f64; FREQ_COUNT] {
    let spec = &a.spectrogram;
    let avg = spec.mean_spectrum();
    let shape = spectral_shape(&avg, &a.freqs);
    let bands = octave_band_ratios(&avg, &a.freqs, a.sample_rate_hz / 2.0);
    let (mfcc_mean, mfcc_std) = frame_mean_std(&a.mfcc, DEFAULT_MFCC_COEFFS);

    let mut out = [0.0; FREQ_COUNT];
    let head = [
        shape.centroid,
        shape.bandwidth,
        shape.rolloff,
        mean(&a.flux),
        shape.flatness,
        shape.entropy,
        spectral_contrast(&avg),
        shape.skewness,
        shape.kurtosis,
        shape.dominant,
    ];
    out[..10].copy_from_slice(&head);
    out[10..18].copy_from_slice(&bands);
    out[18..31].copy_from_slice(&mfcc_mean);
    out[31..44].copy_from_slice(&mfcc_std);
    out[44] = chroma_mean(spec, a.sample_rate_hz);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::registry::FeatureRegistry;

    fn local(name: &str) -> usize {
        FeatureRegistry.by_name(name).unwrap().id - 35
    }

    fn tone(freq: f64, n: usize) -> AudioSignal {
        let sr = 16000.0;
        AudioSignal::new(
            (0..n).map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / sr).sin()).collect(),
            sr,
        )
        .unwrap()
    }

    #[test]
    fn stationary_signal_has_no_flux() {
        let f = freq_features(&tone(500.0, 16000)).unwrap();
        assert!(f[local("Spectral Flux")] < 1e-6);
    }

    #[test]
    fn tone_centroid_near_frequency() {
        // 1000 Hz sits exactly on bin 32 of a 512-point frame at 16 kHz
        let f = freq_features(&tone(1000.0, 16000)).unwrap();
        assert!((f[local("Spectral Centroid")] - 1000.0).abs() < 1.0);
        assert_eq!(f[local("Dominant Frequency")], 1000.0);
        // Hann leakage puts power 1/16 : 1/4 : 1/16 on bins 31..33, so the
        // cumulative share through bin 32 is 5/6 < 0.85
        assert_eq!(f[local("Spectral Rolloff")], 33.0 * 31.25);
    }

    #[test]
    fn silence_is_zero_spectrally() {
        let x = AudioSignal::new(vec![0.0; 4000], 16000.0).unwrap();
        let f = freq_features(&x).unwrap();
        for name in ["Spectral Centroid", "Spectral Bandwidth", "Spectral Rolloff", "Spectral Flux"] {
            assert_eq!(f[local(name)], 0.0, "{name}");
        }
        assert!(f.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn too_short() {
        assert!(freq_features(&tone(100.0, 100)).is_err());
    }
}
