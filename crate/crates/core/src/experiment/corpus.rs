//! Raw recordings with labels: WAV directory loading and writing, and the
//! conversion of synthetic corpora.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::extract_batch;
use crate::signal::AudioSignal;
use crate::synth::{class_names, SyntheticCorpus};
use crate::wav::{read_wav, write_wav};

/// Labelled recordings before feature extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub signals: Vec<AudioSignal>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub sample_ids: Vec<String>,
    pub seeds: Vec<Option<u64>>,
    pub provenance: String,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn extract(&self) -> Result<Dataset> {
        self.extract_from(&self.signals)
    }

    /// Features of replacement signals (e.g. preprocessed) with this corpus's
    /// labels and ids.
    pub fn extract_from(&self, signals: &[AudioSignal]) -> Result<Dataset> {
        if signals.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual: signals.len() });
        }
        Dataset::new(
            extract_batch(signals)?,
            self.labels.clone(),
            self.class_names.clone(),
            self.sample_ids.clone(),
            self.seeds.clone(),
            self.provenance.clone(),
        )
    }
}

impl From<SyntheticCorpus> for Corpus {
    fn from(c: SyntheticCorpus) -> Self {
        let sample_ids = c.sample_ids();
        let provenance = format!(
            "synthetic: {} per class, {} s at {} Hz, base seed {}",
            c.config.samples_per_class, c.config.duration_s, c.config.sample_rate_hz, c.config.base_seed
        );
        Corpus {
            signals: c.signals,
            labels: c.labels,
            class_names: class_names(),
            sample_ids,
            seeds: c.seeds.into_iter().map(Some).collect(),
            provenance,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRow {
    filename: String,
    label: String,
    #[serde(default)]
    seed: Option<u64>,
}

/// Class order: the synthetic fault order when every label is one of its
/// names, otherwise lexicographic.
fn class_order(labels: &[String]) -> Vec<String> {
    let known = class_names();
    let present: BTreeSet<&String> = labels.iter().collect();
    if present.iter().all(|l| known.contains(l)) {
        known
    } else {
        present.into_iter().cloned().collect()
    }
}

/// Read every file named in `labels_csv`. Missing files fail the load unless
/// `permissive`, in which case they are logged and skipped. Stereo or
/// non-16-bit files always fail, naming the file.
pub fn read_corpus(dir: &Path, labels_csv: &Path, permissive: bool) -> Result<Corpus> {
    let has_wav = fs::read_dir(dir)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?
        .filter_map(|e| e.ok())
        .any(|e| e.path().extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")));
    if !has_wav {
        return Err(Error::invalid(format!("{}: no WAV files found", dir.display())));
    }
    let labels_path = if labels_csv.is_absolute() { labels_csv.to_path_buf() } else { dir.join(labels_csv) };
    let mut reader = csv::Reader::from_path(&labels_path)
        .map_err(|e| Error::Csv(format!("{}: {e}", labels_path.display())))?;
    let mut rows = Vec::new();
    for (line, rec) in reader.deserialize::<LabelRow>().enumerate() {
        rows.push(rec.map_err(|e| Error::Csv(format!("{} row {}: {e}", labels_path.display(), line + 1)))?);
    }
    if rows.is_empty() {
        return Err(Error::Csv(format!("{}: no rows", labels_path.display())));
    }

    let mut kept = Vec::new();
    let mut signals = Vec::new();
    for row in rows {
        let path = dir.join(&row.filename);
        if !path.is_file() {
            if permissive {
                log::warn!("skipping {}: file not found", path.display());
                continue;
            }
            return Err(Error::Wav(format!("{}: file not found", path.display())));
        }
        signals.push(read_wav(&path)?);
        kept.push(row);
    }
    if kept.is_empty() {
        return Err(Error::invalid(format!("{}: none of the listed files exist", dir.display())));
    }
    let names: Vec<String> = kept.iter().map(|r| r.label.clone()).collect();
    let classes = class_order(&names);
    let labels = names.iter().map(|n| classes.iter().position(|c| c == n).unwrap_or(0)).collect();
    Ok(Corpus {
        signals,
        labels,
        class_names: classes,
        sample_ids: kept.iter().map(|r| r.filename.clone()).collect(),
        seeds: kept.iter().map(|r| r.seed).collect(),
        provenance: format!("wav: {} files from {}", kept.len(), dir.display()),
    })
}

/// Load a WAV corpus and extract its features.
pub fn load_corpus(dir: &Path, labels_csv: &Path, permissive: bool) -> Result<Dataset> {
    read_corpus(dir, labels_csv, permissive)?.extract()
}

/// Headroom left below full scale when a corpus has to be attenuated.
pub const WRITE_PEAK: f64 = 0.99;

/// Write `<sample_id>.wav` per recording plus `labels.csv`. If any recording
/// would clip, every file is attenuated by the same gain so relative levels
/// survive; the gain is returned.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<f64> {
    fs::create_dir_all(dir)?;
    let peak = corpus.signals.iter().map(AudioSignal::peak).fold(0.0, f64::max);
    let gain = if peak > WRITE_PEAK { WRITE_PEAK / peak } else { 1.0 };
    if gain < 1.0 {
        log::info!("corpus peak {peak:.3}; writing with gain {gain:.6}");
    }
    let mut w = csv::Writer::from_path(dir.join("labels.csv"))?;
    for i in 0..corpus.len() {
        let filename = format!("{}.wav", corpus.sample_ids[i]);
        let x = &corpus.signals[i];
        if gain < 1.0 {
            let scaled = AudioSignal::new(x.samples().iter().map(|v| v * gain).collect(), x.sample_rate_hz())?;
            write_wav(dir.join(&filename), &scaled)?;
        } else {
            write_wav(dir.join(&filename), x)?;
        }
        w.serialize(LabelRow {
            filename,
            label: corpus.class_names[corpus.labels[i]].clone(),
            seed: corpus.seeds[i],
        })?;
    }
    w.flush()?;
    Ok(gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_dataset, GeneratorConfig};

    fn tiny() -> Corpus {
        let cfg = GeneratorConfig { samples_per_class: 1, duration_s: 0.25, ..Default::default() };
        generate_dataset(&cfg).unwrap().into()
    }

    #[test]
    fn round_trip_through_wav() {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny();
        let gain = write_corpus(&c, dir.path()).unwrap();
        assert!(gain < 1.0);
        let back = read_corpus(dir.path(), Path::new("labels.csv"), false).unwrap();
        assert_eq!(back.labels, c.labels);
        assert_eq!(back.class_names, c.class_names);
        assert_eq!(back.seeds, c.seeds);
        for (a, b) in back.signals.iter().zip(&c.signals) {
            let err = a.samples().iter().zip(b.samples()).map(|(u, v)| (u - gain * v).abs()).fold(0.0, f64::max);
            assert!(err <= 0.5 / 32768.0 + 1e-12);
        }
    }

    #[test]
    fn three_files_give_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let sr = 16_000.0;
        let mut w = csv::Writer::from_path(dir.path().join("labels.csv")).unwrap();
        w.write_record(["filename", "label"]).unwrap();
        for (i, f) in [200.0, 400.0, 800.0].iter().enumerate() {
            let x: Vec<f64> = (0..8000).map(|n| 0.3 * (2.0 * std::f64::consts::PI * f * n as f64 / sr).sin()).collect();
            let name = format!("tone{i}.wav");
            write_wav(dir.path().join(&name), &AudioSignal::new(x, sr).unwrap()).unwrap();
            w.write_record([name.as_str(), if i == 0 { "ok" } else { "bad" }]).unwrap();
        }
        w.flush().unwrap();
        let d = load_corpus(dir.path(), Path::new("labels.csv"), false).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.features.cols(), 127);
        assert_eq!(d.class_names, vec!["bad".to_string(), "ok".to_string()]);
        assert_eq!(d.labels, vec![1, 0, 0]);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(read_corpus(dir.path(), Path::new("labels.csv"), true).is_err());
    }

    #[test]
    fn stereo_is_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let spec = hound::WavSpec { channels: 2, sample_rate: 16_000, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
        let mut wr = hound::WavWriter::create(dir.path().join("stereo.wav"), spec).unwrap();
        for _ in 0..200 {
            wr.write_sample(0i16).unwrap();
        }
        wr.finalize().unwrap();
        fs::write(dir.path().join("labels.csv"), "filename,label\nstereo.wav,normal\n").unwrap();
        let err = read_corpus(dir.path(), Path::new("labels.csv"), true).unwrap_err();
        assert!(err.to_string().contains("stereo.wav"), "{err}");
    }

    #[test]
    fn missing_files_need_the_permissive_flag() {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny();
        write_corpus(&c, dir.path()).unwrap();
        let mut text = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
        text.push_str("ghost.wav,normal,\n");
        fs::write(dir.path().join("labels.csv"), text).unwrap();
        let err = read_corpus(dir.path(), Path::new("labels.csv"), false).unwrap_err();
        assert!(err.to_string().contains("ghost.wav"));
        assert_eq!(read_corpus(dir.path(), Path::new("labels.csv"), true).unwrap().len(), 5);
    }

    #[test]
    fn malformed_csv_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&tiny(), dir.path()).unwrap();
        fs::write(dir.path().join("labels.csv"), "name,class\nx.wav,normal\n").unwrap();
        assert!(matches!(read_corpus(dir.path(), Path::new("labels.csv"), false), Err(Error::Csv(_))));
    }
}
