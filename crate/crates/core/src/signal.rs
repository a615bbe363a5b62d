//! Waveform container, amplitude/RMS normalization and framing.

use crate::error::{Error, Result};

/// Uniformly sampled mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl AudioSignal {
    /// Samples must be non-empty and finite, the rate strictly positive.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("signal has no samples"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Mean of squared samples.
    pub fn power(&self) -> f64 {
        mean_square(&self.samples)
    }

    pub fn rms(&self) -> f64 {
        self.power().sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Same rate, new samples. Used internally where finiteness is already
    /// guaranteed by construction.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert!(samples.iter().all(|v| v.is_finite()));
        Self {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

pub(crate) fn mean_square(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Divide by the peak absolute value so the output peak is exactly 1.
pub fn normalize_amplitude(x: &AudioSignal) -> Result<AudioSignal> {
    let peak = x.peak();
    if peak == 0.0 {
        return Err(Error::degenerate("cannot amplitude-normalize an all-zero signal"));
    }
    Ok(x.with_samples(x.samples.iter().map(|v| v / peak).collect()))
}

/// Divide by the root mean square so the output RMS is 1.
pub fn normalize_rms(x: &AudioSignal) -> Result<AudioSignal> {
    let rms = x.rms();
    if rms == 0.0 {
        return Err(Error::degenerate("cannot RMS-normalize an all-zero signal"));
    }
    Ok(x.with_samples(x.samples.iter().map(|v| v / rms).collect()))
}

/// Contiguous equal-length windows over a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Vec<f64>>,
    pub window_size: usize,
    pub hop: usize,
    pub sample_rate_hz: f64,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// `floor((n - window) / hop) + 1`, or 0 when the window does not fit.
pub fn frame_count(n: usize, window_size: usize, hop: usize) -> usize {
    if window_size == 0 || hop == 0 || n < window_size {
        0
    } else {
        (n - window_size) / hop + 1
    }
}

pub(crate) fn check_framing(n: usize, window_size: usize, hop: usize) -> Result<()> {
    if window_size == 0 || hop == 0 {
        return Err(Error::invalid("window size and hop must be positive"));
    }
    if hop > window_size {
        return Err(Error::invalid(format!(
            "hop {hop} exceeds window size {window_size}"
        )));
    }
    if window_size > n {
        return Err(Error::TooShort {
            needed: window_size,
            actual: n,
        });
    }
    Ok(())
}

/// Slice `x` into frames without padding.
pub fn frame_signal(x: &AudioSignal, window_size: usize, hop: usize) -> Result<FrameSequence> {
    check_framing(x.len(), window_size, hop)?;
    let count = frame_count(x.len(), window_size, hop);
    let frames = (0..count)
        .map(|m| x.samples[m * hop..m * hop + window_size].to_vec())
        .collect();
    Ok(FrameSequence {
        frames,
        window_size,
        hop,
        sample_rate_hz: x.sample_rate_hz,
    })
}

/// Periodic Hann window. At 50% overlap its shifted copies sum to one.
pub fn hann_window(n: usize) -> Vec<f64> {
    let step = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|i| 0.5 - 0.5 * (step * i as f64).cos()).collect()
}

/// Plain overlap-add of frames placed `hop` samples apart.
pub fn overlap_add(frames: &[Vec<f64>], hop: usize, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (m, frame) in frames.iter().enumerate() {
        let start = m * hop;
        for (i, v) in frame.iter().enumerate() {
            if let Some(o) = out.get_mut(start + i) {
                *o += v;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(v: Vec<f64>) -> AudioSignal {
        AudioSignal::new(v, 8000.0).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(AudioSignal::new(vec![], 8000.0).is_err());
        assert!(AudioSignal::new(vec![1.0], 0.0).is_err());
        assert!(AudioSignal::new(vec![f64::NAN], 8000.0).is_err());
    }

    #[test]
    fn amplitude_normalization_examples() {
        let out = normalize_amplitude(&sig(vec![2.0, -4.0, 1.0])).unwrap();
        assert_eq!(out.samples(), &[0.5, -1.0, 0.25]);
        let unit = sig(vec![0.25, -1.0, 0.5]);
        assert_eq!(normalize_amplitude(&unit).unwrap(), unit);
        assert!(matches!(
            normalize_amplitude(&sig(vec![0.0; 3])),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn rms_normalization_examples() {
        let out = normalize_rms(&sig(vec![2.0; 4])).unwrap();
        assert_eq!(out.samples(), &[1.0; 4]);
        assert!(normalize_rms(&sig(vec![0.0; 4])).is_err());

        // a whole number of periods so the discrete RMS is exactly A/sqrt(2)
        let a = 3.0;
        let n = 800;
        let s: Vec<f64> = (0..n)
            .map(|i| a * (2.0 * std::f64::consts::PI * 10.0 * i as f64 / n as f64).sin())
            .collect();
        let out = normalize_rms(&sig(s)).unwrap();
        let peak = out.peak();
        assert!((peak - 2f64.sqrt()).abs() < 1e-9, "peak {peak}");
    }

    #[test]
    fn framing_examples() {
        let x = sig(vec![0.1; 1000]);
        assert_eq!(frame_signal(&x, 256, 128).unwrap().len(), 6);
        let y = sig(vec![0.1; 256]);
        assert_eq!(frame_signal(&y, 256, 128).unwrap().len(), 1);
        assert!(frame_signal(&x, 128, 256).is_err());
        assert!(matches!(
            frame_signal(&y, 512, 256),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn frames_are_contiguous_slices() {
        let x = sig((0..20).map(f64::from).collect());
        let f = frame_signal(&x, 8, 4).unwrap();
        assert_eq!(f.len(), 4);
        assert_eq!(f.frames[2], (8..16).map(f64::from).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn normalizations_are_idempotent(v in prop::collection::vec(-100.0f64..100.0, 1..200)) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            let s = sig(v);
            let a1 = normalize_amplitude(&s).unwrap();
            let a2 = normalize_amplitude(&a1).unwrap();
            let r1 = normalize_rms(&s).unwrap();
            let r2 = normalize_rms(&r1).unwrap();
            prop_assert!((a1.peak() - 1.0).abs() == 0.0);
            prop_assert!((r1.rms() - 1.0).abs() < 1e-12);
            for (p, q) in a1.samples().iter().zip(a2.samples()) {
                prop_assert!((p - q).abs() < 1e-12);
            }
            for (p, q) in r1.samples().iter().zip(r2.samples()) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }

        #[test]
        fn hann_overlap_add_reconstructs_interior(
            v in prop::collection::vec(-1.0f64..1.0, 300..600),
            half in 8usize..40,
        ) {
            let window = 2 * half;
            let x = sig(v.clone());
            let frames = frame_signal(&x, window, half).unwrap();
            let w = hann_window(window);
            let weighted: Vec<Vec<f64>> = frames
                .frames
                .iter()
                .map(|f| f.iter().zip(&w).map(|(a, b)| a * b).collect())
                .collect();
            let y = overlap_add(&weighted, half, v.len());
            let covered_end = (frames.len() - 1) * half + half;
            for i in half..covered_end {
                let scale = v[i].abs().max(1e-3);
                prop_assert!((y[i] - v[i]).abs() / scale < 1e-6);
            }
        }
    }
}
