//! Spectral transforms and mid-level representations.

pub mod chroma;
pub mod fft;
pub mod mel;
pub mod stft;
pub mod wavelet;

pub use chroma::{chroma_mean, chroma_vector};
pub use fft::{fft, fft_complex, ifft_complex, next_pow2, power_spectrum, Spectrum};
pub use mel::{mfcc, MelFilterbank};
pub use stft::{analysis_window, stft, Spectrogram};
pub use wavelet::{dwt, dwt_energies, WaveletCoefficients, WaveletDecomposition};
