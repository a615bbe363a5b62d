use super::stft::Spectrogram;

/// Pitch class of a frequency with C = 0 and A4 = 440 Hz.
pub fn pitch_class(freq_hz: f64) -> usize {
    let midi = 69.0 + 12.0 * (freq_hz / 440.0).log2();
    (midi.round() as i64).rem_euclid(12) as usize
}

/// Bin power folded into 12 pitch classes, averaged over frames. The DC bin
/// has no pitch and is skipped.
pub fn chroma_vector(spec: &Spectrogram, sample_rate_hz: f64) -> [f64; 12] {
    let mut acc = [0.0; 12];
    if spec.power.is_empty() {
        return acc;
    }
    let bin_hz = sample_rate_hz / spec.fft_size as f64;
    let classes: Vec<usize> = (1..spec.bin_count()).map(|k| pitch_class(k as f64 * bin_hz)).collect();
    for row in &spec.power {
        for (p, &c) in row[1..].iter().zip(&classes) {
            acc[c] += p;
        }
    }
    let n = spec.power.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Mean of the frame-averaged chroma vector.
pub fn chroma_mean(spec: &Spectrogram, sample_rate_hz: f64) -> f64 {
    chroma_vector(spec, sample_rate_hz).iter().sum::<f64>() / 12.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::stft::stft;
    use crate::signal::AudioSignal;

    fn tone(freq: f64, amp: f64) -> AudioSignal {
        let sr = 16000.0;
        AudioSignal::new(
            (0..16000)
                .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / sr).sin())
                .collect(),
            sr,
        )
        .unwrap()
    }

    #[test]
    fn pitch_classes() {
        assert_eq!(pitch_class(440.0), 9);
        assert_eq!(pitch_class(880.0), 9);
        assert_eq!(pitch_class(261.63), 0);
    }

    #[test]
    fn silence_is_zero() {
        let x = AudioSignal::new(vec![0.0; 4096], 16000.0).unwrap();
        assert_eq!(chroma_mean(&stft(&x, 512, 256).unwrap(), 16000.0), 0.0);
    }

    #[test]
    fn a440_dominates() {
        // 4096-point frames give 3.9 Hz bins, so the Hann main lobe stays
        // inside the A pitch class (427..453 Hz)
        let spec = stft(&tone(440.0, 1.0), 4096, 2048).unwrap();
        let v = chroma_vector(&spec, 16000.0);
        let total: f64 = v.iter().sum();
        assert!(v[9] / total > 0.9, "A share {}", v[9] / total);
    }

    #[test]
    fn linear_in_power() {
        let a = chroma_mean(&stft(&tone(300.0, 1.0), 512, 256).unwrap(), 16000.0);
        let b = chroma_mean(&stft(&tone(300.0, 3.0), 512, 256).unwrap(), 16000.0);
        assert!((b - 9.0 * a).abs() < 1e-9 * b);
    }
}
