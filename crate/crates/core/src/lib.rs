//! Acoustic equipment condition monitoring benchmark.
//!
//! The crate is organised along the pipeline: [`signal`] and [`preprocess`]
//! hold the waveform and its cleanup, [`dsp`] the spectral kernels,
//! [`features`] the 127-entry descriptor, [`synth`] the synthetic fault
//! corpus, [`learners`] the six classifiers and the soft-voting ensemble,
//! [`eval`] metrics, cross-validation and significance tests, and
//! [`experiment`] the configuration-driven orchestration that produces the
//! report bundle.

pub mod dataset;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod learners;
pub mod preprocess;
pub mod rng;
pub mod signal;
pub mod synth;
pub mod wav;

pub use error::{Error, Result};
pub use signal::AudioSignal;
