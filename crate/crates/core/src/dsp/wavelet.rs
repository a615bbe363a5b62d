//! Periodized Daubechies-4 (8-tap) discrete wavelet decomposition.

use crate::error::{Error, Result};
use crate::signal::AudioSignal;

pub const DEFAULT_LEVELS: usize = 5;

/// db4 scaling (low-pass reconstruction) filter.
const DB4: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

fn wavelet_filter() -> [f64; 8] {
    let mut g = [0.0; 8];
    for (k, gk) in g.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *gk = sign * DB4[7 - k];
    }
    g
}

/// One analysis step with periodic extension; `x.len()` must be even.
fn analyze(x: &[f64], g: &[f64; 8]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for i in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for k in 0..8 {
            let v = x[(2 * i + k) % n];
            a += DB4[k] * v;
            d += g[k] * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
    (approx, detail)
}

/// Coefficients of a multi-level decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    /// `details[0]` is D1 (finest).
    pub details: Vec<Vec<f64>>,
    pub approx: Vec<f64>,
}

/// Subband energies of a multi-level decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    /// D1..Dn, finest first.
    pub detail_energies: Vec<f64>,
    pub approx_energy: f64,
    /// Energy of the input signal, `sum x^2`.
    pub total_energy: f64,
}

impl WaveletDecomposition {
    /// Subband energies in order D1..Dn, An.
    pub fn band_energies(&self) -> Vec<f64> {
        let mut v = self.detail_energies.clone();
        v.push(self.approx_energy);
        v
    }
}

fn check_len(n: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::invalid("need at least one decomposition level"));
    }
    let needed = 1usize << levels;
    if n < needed {
        return Err(Error::TooShort { needed, actual: n });
    }
    Ok(())
}

/// Decompose `x` over `levels` levels. The input is zero-padded to a multiple
/// of `2^levels`, which leaves its energy unchanged.
pub fn dwt(x: &[f64], levels: usize) -> Result<WaveletCoefficients> {
    check_len(x.len(), levels)?;
    let block = 1usize << levels;
    let padded_len = x.len().div_ceil(block) * block;
    let mut current = x.to_vec();
    current.resize(padded_len, 0.0);
    let g = wavelet_filter();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analyze(&current, &g);
        details.push(d);
        current = a;
    }
    Ok(WaveletCoefficients {
        details,
        approx: current,
    })
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

pub fn dwt_energies(x: &AudioSignal, levels: usize) -> Result<WaveletDecomposition> {
    let coeffs = dwt(x.samples(), levels)?;
    Ok(energies_of(&coeffs, x.samples()))
}

pub(crate) fn energies_of(coeffs: &WaveletCoefficients, x: &[f64]) -> WaveletDecomposition {
    WaveletDecomposition {
        detail_energies: coeffs.details.iter().map(|d| energy(d)).collect(),
        approx_energy: energy(&coeffs.approx),
        total_energy: energy(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(v: Vec<f64>) -> AudioSignal {
        AudioSignal::new(v, 1000.0).unwrap()
    }

    #[test]
    fn filter_is_orthonormal() {
        let s: f64 = DB4.iter().sum();
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
        let e: f64 = DB4.iter().map(|h| h * h).sum();
        assert!((e - 1.0).abs() < 1e-12);
        let g = wavelet_filter();
        assert!(g.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn zero_signal() {
        let d = dwt_energies(&sig(vec![0.0; 64]), 5).unwrap();
        assert!(d.band_energies().iter().all(|&e| e == 0.0));
        assert_eq!(d.total_energy, 0.0);
    }

    #[test]
    fn constant_has_no_detail_energy() {
        let d = dwt_energies(&sig(vec![0.7; 256]), 5).unwrap();
        for e in &d.detail_energies {
            assert!(*e < 1e-10 * d.total_energy, "{e}");
        }
        assert!((d.approx_energy - d.total_energy).abs() < 1e-9 * d.total_energy);
    }

    #[test]
    fn too_short() {
        assert!(matches!(dwt_energies(&sig(vec![1.0; 31]), 5), Err(Error::TooShort { .. })));
        assert!(dwt_energies(&sig(vec![1.0; 32]), 5).is_ok());
    }

    #[test]
    fn coefficient_counts() {
        let c = dwt(&[1.0; 256], 5).unwrap();
        let lens: Vec<usize> = c.details.iter().map(Vec::len).collect();
        assert_eq!(lens, vec![128, 64, 32, 16, 8]);
        assert_eq!(c.approx.len(), 8);
    }

    proptest! {
        #[test]
        fn energy_is_conserved(v in prop::collection::vec(-1.0f64..1.0, 32..700)) {
            let d = dwt_energies(&sig(v), 5).unwrap();
            let sum: f64 = d.band_energies().iter().sum();
            prop_assert!((sum - d.total_energy).abs() <= 1e-6 * d.total_energy.max(1e-300));
        }
    }
}
