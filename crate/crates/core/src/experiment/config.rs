//! TOML experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::CvSettings;
use crate::learners::{ModelKind, ModelParams};
use crate::preprocess::NOISE_LEAD_S;
use crate::synth::GeneratorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root of every random stream in the run.
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub data: DataSource,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub cv: CvSettings,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub reports: ReportConfig,
    #[serde(default = "default_models")]
    pub models: Vec<ModelParams>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

/// One of each kind, the ensemble last.
pub fn default_models() -> Vec<ModelParams> {
    [ModelKind::Knn, ModelKind::Svm, ModelKind::Rf, ModelKind::Gbt, ModelKind::Mlp, ModelKind::Ensemble]
        .into_iter()
        .map(ModelParams::default_for)
        .collect()
}

/// Where the recordings come from. For synthetic data the generator's
/// `base_seed` is replaced by the global seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    Synthetic(GeneratorConfig),
    Wav(WavSource),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(GeneratorConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavSource {
    pub dir: PathBuf,
    /// `filename,label[,seed]`; relative paths resolve against `dir`.
    #[serde(default = "default_labels")]
    pub labels: PathBuf,
    /// Skip rows whose file is missing instead of failing.
    #[serde(default)]
    pub permissive: bool,
}

fn default_labels() -> PathBuf {
    PathBuf::from("labels.csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    None,
    Amplitude,
    Rms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Over-subtraction factor; absent disables spectral subtraction.
    pub subtraction_alpha: Option<f64>,
    /// Leading stretch of each recording used as the noise estimate.
    pub noise_lead_s: f64,
    pub normalization: Normalization,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { subtraction_alpha: None, noise_lead_s: NOISE_LEAD_S, normalization: Normalization::None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// SNR levels in dB, strictly decreasing. `inf` is allowed.
    pub levels_db: Vec<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { levels_db: vec![40.0, 30.0, 20.0, 10.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Wall-clock timing table. Off keeps the run strictly reproducible.
    pub timing: bool,
    pub timing_repetitions: usize,
    /// Nemenyi `q_alpha`; when set, the critical difference is reported.
    pub nemenyi_q_alpha: Option<f64>,
    /// Output formats; only `csv` is produced.
    pub formats: Vec<String>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { timing: true, timing_repetitions: 3, nemenyi_q_alpha: None, formats: vec!["csv".into()] }
    }
}

impl ExperimentConfig {
    /// Defaults everywhere except the mandatory seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            out_dir: default_out_dir(),
            data: DataSource::default(),
            preprocess: PreprocessConfig::default(),
            cv: CvSettings::default(),
            noise: NoiseConfig::default(),
            reports: ReportConfig::default(),
            models: default_models(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read an optional TOML file and apply command-line overrides. The seed
    /// has to come from one of the two.
    pub fn load(path: Option<&Path>, seed: Option<u64>, out_dir: Option<&Path>) -> Result<Self> {
        let mut table: toml::Table = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        if let Some(s) = seed {
            let v = i64::try_from(s).map_err(|_| Error::Config(format!("seed {s} exceeds {}", i64::MAX)))?;
            table.insert("seed".into(), toml::Value::Integer(v));
        }
        if let Some(o) = out_dir {
            table.insert("out_dir".into(), toml::Value::String(o.display().to_string()));
        }
        if !table.contains_key("seed") {
            return Err(Error::Config("a seed is mandatory: set `seed` in the config file or pass --seed".into()));
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        for m in &self.models {
            m.validate()?;
        }
        self.cv.validate()?;
        let levels = &self.noise.levels_db;
        if levels.iter().any(|l| l.is_nan() || *l == f64::NEG_INFINITY) {
            return Err(Error::Config(format!("noise levels must be real or +inf: {levels:?}")));
        }
        if levels.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config(format!("noise levels must be strictly decreasing: {levels:?}")));
        }
        if let DataSource::Synthetic(g) = &self.data {
            g.validate()?;
        }
        if let Some(a) = self.preprocess.subtraction_alpha {
            if !(1.0..=3.0).contains(&a) {
                return Err(Error::Config(format!("preprocess: subtraction_alpha must lie in [1, 3], got {a}")));
            }
        }
        if !(self.preprocess.noise_lead_s > 0.0) {
            return Err(Error::Config("preprocess: noise_lead_s must be positive".into()));
        }
        if self.reports.timing && self.reports.timing_repetitions < 3 {
            return Err(Error::Config("reports: timing_repetitions must be at least 3".into()));
        }
        if let Some(f) = self.reports.formats.iter().find(|f| f.as_str() != "csv") {
            return Err(Error::Config(format!("reports: unsupported format {f:?}; only csv is available")));
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form with the output directory blanked,
    /// so the same experiment written to two places hashes the same.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }

    /// The generator settings actually used for a synthetic source.
    pub fn generator(&self) -> Option<GeneratorConfig> {
        match &self.data {
            DataSource::Synthetic(g) => Some(GeneratorConfig { base_seed: self.seed, ..g.clone() }),
            DataSource::Wav(_) => None,
        }
    }
}
