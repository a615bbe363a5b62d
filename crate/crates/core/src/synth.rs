//! Synthetic five-class fault corpus and SNR-controlled noise injection.
//!
//! A sample is a shaft tone with decaying harmonics, a periodic train of
//! exponentially decaying resonance bursts whose amplitude grows with
//! severity, and a Gaussian floor. Random draws happen in a fixed order
//! (harmonics, impulses, noise) and never depend on the class, so two
//! classes generated from the same seed differ only in the impulse
//! amplitude.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::extract_batch;
use crate::rng::rng_from_seed;
use crate::signal::{mean_square, AudioSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultClass {
    Normal = 0,
    EarlyFault = 1,
    ModerateFault = 2,
    SevereFault = 3,
    CriticalFault = 4,
}

impl FaultClass {
    pub const ALL: [FaultClass; 5] = [
        FaultClass::Normal,
        FaultClass::EarlyFault,
        FaultClass::ModerateFault,
        FaultClass::SevereFault,
        FaultClass::CriticalFault,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FaultClass::Normal => "normal",
            FaultClass::EarlyFault => "early-fault",
            FaultClass::ModerateFault => "moderate-fault",
            FaultClass::SevereFault => "severe-fault",
            FaultClass::CriticalFault => "critical-fault",
        }
    }
}

pub fn class_names() -> Vec<String> {
    FaultClass::ALL.iter().map(|c| c.name().to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub samples_per_class: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub base_seed: u64,
    pub shaft_hz: f64,
    /// Relative uniform jitter on the shaft frequency per sample.
    pub shaft_jitter: f64,
    pub harmonics: usize,
    /// Operating-load gain drawn uniformly from `[1 - g, 1 + g]`.
    pub load_variation: f64,
    /// Impulse repetition rate per class, Hz.
    pub impulse_rate_hz: [f64; 5],
    /// Relative jitter on each inter-impulse interval.
    pub impulse_jitter: f64,
    /// Burst peak per class as a multiple of `impulse_base`.
    pub impulse_amplitude: [f64; 5],
    pub impulse_base: f64,
    pub resonance_hz: f64,
    pub resonance_decay_s: f64,
    /// Gaussian floor level relative to the tone RMS, dB.
    pub noise_floor_db: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            samples_per_class: 200,
            duration_s: 1.0,
            sample_rate_hz: 16_000.0,
            base_seed: 42,
            shaft_hz: 60.0,
            shaft_jitter: 0.02,
            harmonics: 5,
            load_variation: 0.2,
            impulse_rate_hz: [107.0; 5],
            impulse_jitter: 0.01,
            impulse_amplitude: [0.0, 0.1, 0.3, 0.6, 1.0],
            impulse_base: 1.0,
            resonance_hz: 4000.0,
            resonance_decay_s: 5e-4,
            noise_floor_db: -40.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.samples_per_class == 0 {
            return bad("samples_per_class must be at least 1".into());
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return bad(format!("sample_rate_hz must be positive, got {}", self.sample_rate_hz));
        }
        if self.samples() < 1 {
            return bad("duration_s * sample_rate_hz is below one sample".into());
        }
        if !(self.shaft_hz > 0.0) || self.harmonics == 0 {
            return bad("shaft_hz must be positive and harmonics at least 1".into());
        }
        if !(0.0..1.0).contains(&self.shaft_jitter)
            || !(0.0..1.0).contains(&self.impulse_jitter)
            || !(0.0..1.0).contains(&self.load_variation)
        {
            return bad("jitter and load variation must lie in [0, 1)".into());
        }
        if self.impulse_rate_hz.iter().any(|r| !(*r > 0.0)) {
            return bad("impulse rates must be positive".into());
        }
        if self.impulse_amplitude.windows(2).any(|w| !(w[1] > w[0])) || self.impulse_amplitude[0] < 0.0 {
            return bad("impulse amplitudes must be non-negative and strictly increasing with severity".into());
        }
        if !(self.impulse_base > 0.0) || !(self.resonance_hz > 0.0) || !(self.resonance_decay_s > 0.0) {
            return bad("impulse_base, resonance_hz and resonance_decay_s must be positive".into());
        }
        if !self.noise_floor_db.is_finite() {
            return bad("noise_floor_db must be finite".into());
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    /// Seed of sample `index` of `cls`.
    pub fn sample_seed(&self, cls: FaultClass, index: usize) -> u64 {
        self.base_seed
            .wrapping_add((cls.index() * self.samples_per_class) as u64)
            .wrapping_add(index as u64)
    }
}

/// One synthetic recording. Deterministic in `(cls, seed, cfg)`.
pub fn generate_sample(cls: FaultClass, seed: u64, cfg: &GeneratorConfig) -> Result<AudioSignal> {
    cfg.validate()?;
    let n = cfg.samples();
    let sr = cfg.sample_rate_hz;
    let mut rng = rng_from_seed(seed);
    let mut x = vec![0.0; n];

    let f0 = cfg.shaft_hz * (1.0 + rng.random_range(-cfg.shaft_jitter..=cfg.shaft_jitter));
    let gain = 1.0 + rng.random_range(-cfg.load_variation..=cfg.load_variation);
    let mut tone_power = 0.0;
    for h in 1..=cfg.harmonics {
        let phase = rng.random_range(0.0..2.0 * PI);
        let freq = f0 * h as f64;
        if freq >= sr / 2.0 {
            continue;
        }
        let amp = gain / h as f64;
        tone_power += amp * amp / 2.0;
        let w = 2.0 * PI * freq / sr;
        for (i, v) in x.iter_mut().enumerate() {
            *v += amp * (w * i as f64 + phase).sin();
        }
    }

    let rate = cfg.impulse_rate_hz[cls.index()];
    let period = sr / rate;
    let amp = cfg.impulse_amplitude[cls.index()] * cfg.impulse_base * gain;
    let fr = cfg.resonance_hz.min(0.4 * sr);
    let decay = cfg.resonance_decay_s * sr;
    let burst_len = (10.0 * decay).ceil() as usize;
    let mut t = rng.random_range(0.0..period);
    while t < n as f64 {
        if amp > 0.0 {
            let start = t.ceil() as usize;
            for i in start..(start + burst_len).min(n) {
                let dt = i as f64 - t;
                x[i] += amp * (-dt / decay).exp() * (2.0 * PI * fr * dt / sr).sin();
            }
        }
        t += period * (1.0 + rng.random_range(-cfg.impulse_jitter..=cfg.impulse_jitter));
    }

    let sigma = tone_power.sqrt() * 10f64.powf(cfg.noise_floor_db / 20.0);
    for v in x.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * z;
    }
    AudioSignal::new(x, sr)
}

/// Raw signals of a generated corpus, in class-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub signals: Vec<AudioSignal>,
    pub labels: Vec<usize>,
    pub seeds: Vec<u64>,
    pub config: GeneratorConfig,
}

impl SyntheticCorpus {
    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn sample_ids(&self) -> Vec<String> {
        self.labels
            .iter()
            .zip(&self.seeds)
            .map(|(&l, s)| format!("{}_{s}", FaultClass::ALL[l].name()))
            .collect()
    }

    /// Extract the 127 features of every signal.
    pub fn extract(&self) -> Result<Dataset> {
        let features = extract_batch(&self.signals)?;
        Dataset::new(
            features,
            self.labels.clone(),
            class_names(),
            self.sample_ids(),
            self.seeds.iter().map(|&s| Some(s)).collect(),
            format!(
                "synthetic: {} per class, {} s at {} Hz, base seed {}",
                self.config.samples_per_class, self.config.duration_s, self.config.sample_rate_hz, self.config.base_seed
            ),
        )
    }
}

pub fn generate_dataset(cfg: &GeneratorConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let spc = cfg.samples_per_class;
    let jobs: Vec<(FaultClass, u64)> = FaultClass::ALL
        .iter()
        .flat_map(|&c| (0..spc).map(move |i| (c, i)))
        .map(|(c, i)| (c, cfg.sample_seed(c, i)))
        .collect();
    let signals = jobs
        .par_iter()
        .map(|&(c, s)| generate_sample(c, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticCorpus {
        signals,
        labels: jobs.iter().map(|(c, _)| c.index()).collect(),
        seeds: jobs.iter().map(|(_, s)| *s).collect(),
        config: cfg.clone(),
    })
}

/// Add white Gaussian noise rescaled so that the realised SNR equals
/// `snr_db`. `f64::INFINITY` returns the input unchanged.
pub fn add_noise_at_snr(x: &AudioSignal, snr_db: f64, seed: u64) -> Result<AudioSignal> {
    if snr_db == f64::INFINITY {
        return Ok(x.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let ps = x.power();
    if ps == 0.0 {
        return Err(Error::degenerate("cannot set an SNR against a zero-power signal"));
    }
    let mut rng = rng_from_seed(seed);
    let mut noise: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let pn = mean_square(&noise);
    let scale = (ps / 10f64.powf(snr_db / 10.0) / pn).sqrt();
    noise.iter_mut().for_each(|v| *v *= scale);
    let y = x.samples().iter().zip(&noise).map(|(a, b)| a + b).collect();
    AudioSignal::new(y, x.sample_rate_hz())
}

/// Mean F1 over the evaluated conditions (clean included).
pub fn robustness_index(f1_by_condition: &[f64]) -> Result<f64> {
    if f1_by_condition.is_empty() {
        return Err(Error::invalid("robustness index needs at least one condition"));
    }
    Ok(f1_by_condition.iter().sum::<f64>() / f1_by_condition.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::dwt_energies;
    use crate::features::stats::kurtosis;

    fn small() -> GeneratorConfig {
        GeneratorConfig { samples_per_class: 3, duration_s: 0.25, ..Default::default() }
    }

    #[test]
    fn sample_is_deterministic() {
        let cfg = small();
        let a = generate_sample(FaultClass::SevereFault, 7, &cfg).unwrap();
        let b = generate_sample(FaultClass::SevereFault, 7, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4000);
        assert_ne!(a, generate_sample(FaultClass::SevereFault, 8, &cfg).unwrap());
    }

    #[test]
    fn normal_class_is_tone_plus_floor() {
        let cfg = GeneratorConfig { noise_floor_db: -200.0, ..small() };
        let x = generate_sample(FaultClass::Normal, 3, &cfg).unwrap();
        // no bursts: what remains is the harmonic mixture, whose RMS is known
        let mut rng = rng_from_seed(3);
        let _: f64 = rng.random_range(-0.02..=0.02);
        let gain = 1.0 + rng.random_range(-0.2..=0.2);
        let analytic: f64 = (1..=5).map(|h| (gain / h as f64).powi(2) / 2.0).sum::<f64>().sqrt();
        assert!((x.rms() - analytic).abs() / analytic < 0.02, "{} vs {analytic}", x.rms());
        let crest = x.peak() / x.rms();
        assert!(crest > 1.0 && crest < 3.0);
    }

    #[test]
    fn classes_differ_only_by_bursts() {
        let cfg = small();
        let n = generate_sample(FaultClass::Normal, 11, &cfg).unwrap();
        let c = generate_sample(FaultClass::CriticalFault, 11, &cfg).unwrap();
        assert!(kurtosis(c.samples()) > kurtosis(n.samples()));
        let dn = dwt_energies(&n, 5).unwrap().detail_energies[3];
        let dc = dwt_energies(&c, 5).unwrap().detail_energies[3];
        assert!(dc > dn);
    }

    #[test]
    fn severity_is_monotone_on_average() {
        let cfg = GeneratorConfig { duration_s: 0.5, ..Default::default() };
        let seeds = 50;
        let mut kurt = [0.0; 5];
        let mut band = [0.0; 5];
        for cls in FaultClass::ALL {
            for s in 0..seeds {
                let x = generate_sample(cls, 1000 + s, &cfg).unwrap();
                kurt[cls.index()] += kurtosis(x.samples()) / seeds as f64;
                // D1 and D2 cover 2 to 8 kHz, around the 4 kHz resonance
                let d = dwt_energies(&x, 5).unwrap();
                band[cls.index()] += (d.detail_energies[0] + d.detail_energies[1]) / seeds as f64;
            }
        }
        for k in 1..5 {
            assert!(kurt[k] > kurt[k - 1], "kurtosis {kurt:?}");
            assert!(band[k] > band[k - 1], "band energy {band:?}");
        }
    }

    #[test]
    fn dataset_layout() {
        let d = generate_dataset(&small()).unwrap();
        assert_eq!(d.len(), 15);
        assert_eq!(d.labels, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4]);
        assert_eq!(d.seeds[4], 42 + 3 + 1);
        let again = generate_dataset(&small()).unwrap();
        assert_eq!(d, again);
        for k in 0..5 {
            assert_eq!(d.labels.iter().filter(|&&l| l == k).count(), 3);
        }
    }

    #[test]
    fn config_validation() {
        assert!(GeneratorConfig { samples_per_class: 0, ..small() }.validate().is_err());
        assert!(GeneratorConfig { duration_s: 0.0, ..small() }.validate().is_err());
        let mut c = small();
        c.impulse_amplitude = [0.0, 0.3, 0.3, 0.6, 1.0];
        assert!(c.validate().is_err());
        assert!(small().validate().is_ok());
    }

    fn noise_of(x: &AudioSignal, y: &AudioSignal) -> Vec<f64> {
        y.samples().iter().zip(x.samples()).map(|(a, b)| a - b).collect()
    }

    #[test]
    fn snr_is_exact() {
        let x = generate_sample(FaultClass::ModerateFault, 5, &small()).unwrap();
        for snr in [40.0, 30.0, 20.0, 10.0, 0.0] {
            let y = add_noise_at_snr(&x, snr, 9).unwrap();
            let n = noise_of(&x, &y);
            let measured = 10.0 * (x.power() / mean_square(&n)).log10();
            assert!((measured - snr).abs() < 0.1, "{snr}: {measured}");
            assert_eq!(y.len(), x.len());
            assert_eq!(y.sample_rate_hz(), x.sample_rate_hz());
            let sd = mean_square(&n).sqrt();
            let m = n.iter().sum::<f64>() / n.len() as f64;
            assert!(m.abs() < 3.0 * sd / (n.len() as f64).sqrt());
        }
    }

    #[test]
    fn snr_on_unit_power_signal() {
        let x = AudioSignal::new(vec![1.0, -1.0].repeat(2000), 8000.0).unwrap();
        let y = add_noise_at_snr(&x, 0.0, 1).unwrap();
        let pn = mean_square(&noise_of(&x, &y));
        assert!((10.0 * pn.log10()).abs() < 0.1);
    }

    #[test]
    fn clean_sentinel_and_errors() {
        let x = generate_sample(FaultClass::Normal, 1, &small()).unwrap();
        assert_eq!(add_noise_at_snr(&x, f64::INFINITY, 3).unwrap(), x);
        let z = AudioSignal::new(vec![0.0; 10], 8000.0).unwrap();
        assert!(add_noise_at_snr(&z, 10.0, 3).is_err());
        assert!(add_noise_at_snr(&x, f64::NAN, 3).is_err());
    }

    #[test]
    fn robustness_index_examples() {
        assert_eq!(robustness_index(&[1.0; 5]).unwrap(), 1.0);
        assert_eq!(robustness_index(&[1.0, 0.0]).unwrap(), 0.5);
        let ensemble = robustness_index(&[0.942, 0.931, 0.902, 0.834, 0.745]).unwrap();
        assert!((ensemble - 0.8708).abs() < 1e-12);
        assert!(robustness_index(&[]).is_err());
    }
}
