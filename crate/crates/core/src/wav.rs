//! 16-bit PCM mono WAV reading and writing.

use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::AudioSignal;

const FULL_SCALE: f64 = 32768.0;

/// Read a mono 16-bit PCM WAV file; samples are mapped to `[-1, 1)`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let name = path.display();
    let reader = hound::WavReader::open(path)
        .map_err(|e| Error::Wav(format!("{name}: {e}")))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Wav(format!(
            "{name}: {} channels; only mono is supported",
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Wav(format!(
            "{name}: unsupported encoding ({:?}, {} bits); expected 16-bit PCM",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / FULL_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Wav(format!("{name}: {e}")))?;
    AudioSignal::new(samples, f64::from(spec.sample_rate))
        .map_err(|e| Error::Wav(format!("{name}: {e}")))
}

/// Quantize to 16 bits (`round(x * 32768)`, clipped) and write a mono WAV.
/// The sample rate is rounded to whole Hz.
pub fn write_wav(path: impl AsRef<Path>, x: &AudioSignal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: x.sample_rate_hz().round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path.as_ref(), spec)?;
    for &v in x.samples() {
        writer.write_sample(quantize(v))?;
    }
    writer.finalize()?;
    Ok(())
}

pub fn quantize(v: f64) -> i16 {
    (v * FULL_SCALE).round().clamp(-32768.0, 32767.0) as i16
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_on_the_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let s: Vec<f64> = [-32768i16, -1, 0, 1, 12345, 32767]
            .iter()
            .map(|&v| f64::from(v) / 32768.0)
            .collect();
        let x = AudioSignal::new(s, 16000.0).unwrap();
        write_wav(&path, &x).unwrap();
        let y = read_wav(&path).unwrap();
        assert_eq!(x, y);

        // RIFF header: PCM format code 1, mono, 16 bits
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"RIFF");
        assert_eq!(&bytes[8..12], b"WAVE");
        assert_eq!(u16::from_le_bytes([bytes[20], bytes[21]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[22], bytes[23]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[34], bytes[35]]), 16);
        assert_eq!(i16::from_le_bytes([bytes[44], bytes[45]]), -32768);
    }

    #[test]
    fn clips_out_of_range() {
        assert_eq!(quantize(1.0), 32767);
        assert_eq!(quantize(-1.5), -32768);
    }

    #[test]
    fn rejects_stereo() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..8 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        let err = read_wav(&path).unwrap_err().to_string();
        assert!(err.contains("stereo.wav") && err.contains("mono"), "{err}");
    }
}
