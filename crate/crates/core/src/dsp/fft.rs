//! Radix-2 FFT surface. The transform itself is delegated to `rustfft`; this
//! module owns the power-of-two contract, the one-sided power spectrum and
//! bin-frequency bookkeeping.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn check_pow2(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "FFT length must be a power of two, got {n}"
        )));
    }
    Ok(())
}

/// Smallest power of two that is `>= n` (and at least 1).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Full two-sided DFT of a real sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
    bin_hz: f64,
}

impl Spectrum {
    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn size(&self) -> usize {
        self.bins.len()
    }

    /// Hz per bin, `sample_rate / size`.
    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    pub fn from_bins(bins: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        check_pow2(bins.len())?;
        let bin_hz = sample_rate_hz / bins.len() as f64;
        Ok(Self { bins, bin_hz })
    }
}

/// Forward FFT of a real, power-of-two-length sequence.
pub fn fft(x: &[f64], sample_rate_hz: f64) -> Result<Spectrum> {
    check_pow2(x.len())?;
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(buf.len(), false).process(&mut buf);
    Ok(Spectrum {
        bin_hz: sample_rate_hz / x.len() as f64,
        bins: buf,
    })
}

/// Unnormalized forward complex FFT.
pub fn fft_complex(x: &[Complex64]) -> Result<Vec<Complex64>> {
    check_pow2(x.len())?;
    let mut buf = x.to_vec();
    plan(buf.len(), false).process(&mut buf);
    Ok(buf)
}

/// Inverse complex FFT scaled by `1/n`, so `ifft(fft(x)) == x`.
pub fn ifft_complex(x: &[Complex64]) -> Result<Vec<Complex64>> {
    check_pow2(x.len())?;
    let mut buf = x.to_vec();
    plan(buf.len(), true).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    Ok(buf)
}

/// One-sided power `|X[k]|^2` for `k = 0..=size/2`.
pub fn power_spectrum(s: &Spectrum) -> Vec<f64> {
    let half = s.size() / 2;
    s.bins[..=half].iter().map(|z| z.norm_sqr()).collect()
}

/// In-place forward FFT of a zero-padded real frame; returns the one-sided
/// power. `scratch` must have length `fft_size`.
pub(crate) fn frame_power(frame: &[f64], window: &[f64], scratch: &mut Vec<Complex64>) -> Vec<f64> {
    let n = scratch.len();
    for (i, s) in scratch.iter_mut().enumerate() {
        *s = match (frame.get(i), window.get(i)) {
            (Some(v), Some(w)) => Complex64::new(v * w, 0.0),
            _ => Complex64::new(0.0, 0.0),
        };
    }
    plan(n, false).process(scratch);
    scratch[..=n / 2].iter().map(|z| z.norm_sqr()).collect()
}
