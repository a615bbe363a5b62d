//! Small descriptive statistics shared by the extractors. Every function is
//! total: degenerate inputs yield 0 rather than NaN.

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Population standard deviation.
pub fn std(x: &[f64]) -> f64 {
    let m = mean(x);
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn max(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// (variance, skewness, kurtosis); skewness and kurtosis are 0 for constant
/// input. Kurtosis is the Pearson (non-excess) form.
pub fn moments(x: &[f64]) -> (f64, f64, f64) {
    if x.is_empty() || is_constant(x) {
        return (0.0, 0.0, 0.0);
    }
    let m = mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    (m2, m3 / m2.powf(1.5), m4 / (m2 * m2))
}

pub fn kurtosis(x: &[f64]) -> f64 {
    moments(x).2
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn safe_div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Shape statistics of a one-sided power spectrum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpectralShape {
    pub centroid: f64,
    pub bandwidth: f64,
    pub rolloff: f64,
    pub flatness: f64,
    pub entropy: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub dominant: f64,
}

pub const ROLLOFF_FRACTION: f64 = 0.85;
/// Relative floor applied before logs so that scaling the spectrum does not
/// change log-ratio statistics.
const REL_FLOOR: f64 = 1e-12;

pub fn spectral_shape(power: &[f64], freqs: &[f64]) -> SpectralShape {
    let total: f64 = power.iter().sum();
    if power.is_empty() || total <= 0.0 {
        return SpectralShape::default();
    }
    let centroid = power.iter().zip(freqs).map(|(p, f)| p * f).sum::<f64>() / total;
    let (mut c2, mut c3, mut c4) = (0.0, 0.0, 0.0);
    for (p, f) in power.iter().zip(freqs) {
        let d = f - centroid;
        let d2 = d * d;
        c2 += p * d2;
        c3 += p * d2 * d;
        c4 += p * d2 * d2;
    }
    c2 /= total;
    c3 /= total;
    c4 /= total;
    let bandwidth = c2.sqrt();
    let (skewness, kurtosis) = if c2 > 0.0 {
        (c3 / c2.powf(1.5), c4 / (c2 * c2))
    } else {
        (0.0, 0.0)
    };

    let target = ROLLOFF_FRACTION * total;
    let mut acc = 0.0;
    let mut rolloff = *freqs.last().unwrap_or(&0.0);
    for (p, f) in power.iter().zip(freqs) {
        acc += p;
        if acc >= target {
            rolloff = *f;
            break;
        }
    }

    let peak = max(power);
    let floor = REL_FLOOR * peak;
    let n = power.len() as f64;
    let log_mean = power.iter().map(|p| (p + floor).ln()).sum::<f64>() / n;
    let flatness = log_mean.exp() / (total / n + floor);

    let entropy = if power.len() > 1 {
        -power
            .iter()
            .map(|p| p / total)
            .filter(|&q| q > 0.0)
            .map(|q| q * q.ln())
            .sum::<f64>()
            / n.ln()
    } else {
        0.0
    };

    let mut dominant_idx = 0;
    for (i, &p) in power.iter().enumerate() {
        if p > power[dominant_idx] {
            dominant_idx = i;
        }
    }

    SpectralShape {
        centroid,
        bandwidth,
        rolloff,
        flatness,
        entropy,
        skewness,
        kurtosis,
        dominant: freqs[dominant_idx],
    }
}

/// Mean over six octave bands (edges at nyquist / 2^k) of
/// `log10(peak / valley)`, where peak and valley are the means of the top and
/// bottom 20% of bins in the band.
pub fn spectral_contrast(power: &[f64]) -> f64 {
    let total: f64 = power.iter().sum();
    if total <= 0.0 || power.len() < 4 {
        return 0.0;
    }
    let floor = REL_FLOOR * max(power);
    let n = power.len();
    let mut edges: Vec<usize> = (0..=6).map(|k| n >> (6 - k)).collect();
    edges[0] = 0;
    let mut acc = 0.0;
    let mut bands = 0;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mut band: Vec<f64> = power[lo..hi].to_vec();
        band.sort_by(f64::total_cmp);
        let q = ((band.len() as f64 * 0.2).round() as usize).max(1);
        let valley = mean(&band[..q]);
        let peak = mean(&band[band.len() - q..]);
        acc += ((peak + floor) / (valley + floor)).log10();
        bands += 1;
    }
    safe_div(acc, bands as f64)
}

/// Band power shares over eight octave bands: [0, nyq/128), ...,
/// [nyq/2, nyq].
pub fn octave_band_ratios(power: &[f64], freqs: &[f64], nyquist: f64) -> [f64; 8] {
    let mut bands = [0.0; 8];
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return bands;
    }
    for (p, f) in power.iter().zip(freqs) {
        let mut b = 7;
        while b > 0 && *f < nyquist / f64::from(1u32 << (8 - b)) {
            b -= 1;
        }
        bands[b] += p;
    }
    bands.iter_mut().for_each(|b| *b /= total);
    bands
}

/// L2 distance between successive unit-norm magnitude frames. Silent frames
/// normalize to the zero vector.
pub fn flux_series(power_frames: &[Vec<f64>]) -> Vec<f64> {
    let unit: Vec<Vec<f64>> = power_frames
        .iter()
        .map(|p| {
            let mag: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
            let norm = mag.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                mag.iter().map(|v| v / norm).collect()
            } else {
                vec![0.0; mag.len()]
            }
        })
        .collect();
    unit.windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_spectrum() {
        let freqs: Vec<f64> = (0..11).map(|k| k as f64 * 100.0).collect();
        let mut p = vec![0.0; 11];
        p[10] = 4.0;
        let s = spectral_shape(&p, &freqs);
        assert_eq!(s.centroid, 1000.0);
        assert_eq!(s.rolloff, 1000.0);
        assert_eq!(s.bandwidth, 0.0);
        assert_eq!(s.dominant, 1000.0);
    }

    #[test]
    fn symmetric_pair() {
        let freqs: Vec<f64> = (0..5).map(|k| k as f64 * 100.0).collect();
        let p = [0.0, 1.0, 0.0, 1.0, 0.0];
        let s = spectral_shape(&p, &freqs);
        assert!((s.centroid - 200.0).abs() < 1e-12);
        assert!((s.bandwidth - 100.0).abs() < 1e-12);
        assert_eq!(s.rolloff, 300.0);
        assert_eq!(s.dominant, 100.0);
    }

    #[test]
    fn silence_is_zero() {
        let freqs = [0.0, 1.0, 2.0];
        assert_eq!(spectral_shape(&[0.0; 3], &freqs), SpectralShape::default());
        assert_eq!(spectral_contrast(&[0.0; 64]), 0.0);
        assert_eq!(octave_band_ratios(&[0.0; 3], &freqs, 2.0), [0.0; 8]);
    }

    #[test]
    fn flat_spectrum_flatness_and_entropy() {
        let freqs: Vec<f64> = (0..64).map(f64::from).collect();
        let s = spectral_shape(&[2.0; 64], &freqs);
        assert!((s.flatness - 1.0).abs() < 1e-9);
        assert!((s.entropy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moments_of_constant_and_known() {
        assert_eq!(moments(&[3.0; 10]), (0.0, 0.0, 0.0));
        let (v, s, k) = moments(&[1.0, -1.0, 1.0, -1.0]);
        assert_eq!((v, s, k), (1.0, 0.0, 1.0));
    }

    #[test]
    fn band_ratios_sum_to_one() {
        let freqs: Vec<f64> = (0..257).map(|k| k as f64 * 31.25).collect();
        let p: Vec<f64> = (0..257).map(|k| 1.0 + (k % 7) as f64).collect();
        let r = octave_band_ratios(&p, &freqs, 8000.0);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // bins 0 and 1 (0, 31.25 Hz) are below nyq/128 = 62.5 Hz
        assert!((r[0] - (1.0 + 2.0) / p.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn percentile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile_sorted(&s, 0.5), 2.5);
        assert_eq!(percentile_sorted(&s, 1.0), 4.0);
    }

    #[test]
    fn flux_of_identical_frames_is_zero() {
        let frames = vec![vec![1.0, 4.0, 9.0]; 3];
        assert_eq!(flux_series(&frames), vec![0.0, 0.0]);
        let scaled = vec![vec![1.0, 4.0, 9.0], vec![4.0, 16.0, 36.0]];
        assert!(flux_series(&scaled)[0] < 1e-12);
    }
}
