//! Report tables and their CSV rendering.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{
    auc_roc, classification_metrics, mcc, per_class_scores, significance_marker, ClassScores, ConfusionMatrix,
    SignificanceReport,
};
use crate::features::{Domain, FeatureRegistry};
use crate::learners::{argmax, ModelKind, Timing};

pub const REPORT_FORMAT: &str = "condmon-report-v1";

/// Files whose bytes depend only on the configuration and seed.
pub const DETERMINISTIC_FILES: [&str; 15] = [
    "config.toml",
    "dataset.csv",
    "metrics.csv",
    "fold_metrics.csv",
    "per_class.csv",
    "predictions.csv",
    "significance.csv",
    "mcnemar.csv",
    "friedman.csv",
    "ranks.csv",
    "noise.csv",
    "importance.csv",
    "importance_by_domain.csv",
    "registry.csv",
    "manifest.txt",
];

/// One evaluation of one model on one sample set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
    /// Macro one-vs-rest AUC; NaN when no class could be scored.
    pub auc: f64,
}

impl Scores {
    pub const NAMES: [&'static str; 6] = ["accuracy", "precision", "recall", "f1", "mcc", "auc"];

    pub fn evaluate(y_true: &[usize], probs: &[Vec<f64>], classes: usize) -> Result<Self> {
        let pred: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
        let cm = ConfusionMatrix::from_predictions(y_true, &pred, classes)?;
        let m = classification_metrics(&cm)?;
        let auc = match auc_roc(probs, y_true, classes) {
            Ok(r) => r.macro_auc,
            Err(Error::Degenerate(msg)) => {
                log::warn!("{msg}");
                f64::NAN
            }
            Err(e) => return Err(e),
        };
        Ok(Self { accuracy: m.accuracy, precision: m.precision, recall: m.recall, f1: m.f1, mcc: mcc(&cm), auc })
    }

    pub fn values(&self) -> [f64; 6] {
        [self.accuracy, self.precision, self.recall, self.f1, self.mcc, self.auc]
    }

    fn from_values(v: [f64; 6]) -> Self {
        Self { accuracy: v[0], precision: v[1], recall: v[2], f1: v[3], mcc: v[4], auc: v[5] }
    }

    /// Mean and sample standard deviation (n - 1) over folds.
    pub fn mean_std(folds: &[Scores]) -> (Scores, Scores) {
        let n = folds.len() as f64;
        let mut mean = [0.0; 6];
        let mut sd = [0.0; 6];
        for k in 0..6 {
            let vals: Vec<f64> = folds.iter().map(|s| s.values()[k]).collect();
            mean[k] = vals.iter().sum::<f64>() / n;
            sd[k] = if folds.len() > 1 {
                (vals.iter().map(|v| (v - mean[k]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
        }
        (Scores::from_values(mean), Scores::from_values(sd))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport {
    pub name: String,
    pub kind: ModelKind,
    pub folds: Vec<Scores>,
    pub mean: Scores,
    pub std: Scores,
    pub validation: Option<Scores>,
    pub holdout: Option<Scores>,
    /// Per-class scores on the pooled out-of-fold predictions.
    pub cv_per_class: Vec<ClassScores>,
    pub holdout_per_class: Vec<ClassScores>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Cv,
    Validation,
    Holdout,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Cv => "cv",
            Split::Validation => "validation",
            Split::Holdout => "holdout",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "cv" => Ok(Split::Cv),
            "validation" => Ok(Split::Validation),
            "holdout" => Ok(Split::Holdout),
            other => Err(Error::Csv(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub model: String,
    pub sample_id: String,
    pub split: Split,
    pub fold: Option<usize>,
    pub label: usize,
    pub predicted: usize,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub model: String,
    pub clean_f1: f64,
    pub level_f1: Vec<f64>,
    /// Mean of the clean and every noisy F1.
    pub robustness_index: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTable {
    pub levels_db: Vec<f64>,
    pub rows: Vec<NoiseRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainShare {
    pub domain: Domain,
    pub importance: f64,
    pub features: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    /// Which forest produced the numbers.
    pub source: String,
    pub importances: Vec<f64>,
    pub by_domain: Vec<DomainShare>,
}

impl ImportanceReport {
    pub fn new(source: impl Into<String>, importances: Vec<f64>) -> Self {
        let by_domain = Domain::ALL
            .iter()
            .map(|&d| {
                let ids: Vec<usize> = FeatureRegistry.entries().filter(|e| e.domain == d).map(|e| e.id).collect();
                DomainShare {
                    domain: d,
                    importance: ids.iter().map(|&i| importances.get(i).copied().unwrap_or(0.0)).sum(),
                    features: ids.len(),
                }
            })
            .collect();
        Self { source: source.into(), importances, by_domain }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub model: String,
    pub timing: Timing,
}

/// Per-class sample counts in each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SplitCounts {
    pub total: usize,
    pub cv: usize,
    pub validation: usize,
    pub holdout: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub config_toml: String,
    pub config_hash: String,
    pub seed: u64,
    pub registry_version: String,
    pub provenance: String,
    pub class_names: Vec<String>,
    pub split_counts: Vec<SplitCounts>,
    pub n_folds: usize,
    pub holdout_fraction: f64,
    pub validation_fraction: f64,
    pub models: Vec<ModelReport>,
    pub predictions: Vec<PredictionRecord>,
    pub significance: Option<SignificanceReport>,
    pub critical_difference: Option<f64>,
    pub noise: Option<NoiseTable>,
    pub importance: Option<ImportanceReport>,
    pub timing: Option<Vec<TimingRow>>,
}

fn f(v: f64) -> String {
    format!("{v:.6}")
}

fn p_value(v: f64) -> String {
    format!("{v:.4e}")
}

fn level_name(l: f64) -> String {
    if l == f64::INFINITY {
        "snr_inf".into()
    } else {
        format!("snr_{l}db")
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// `significance.csv`, `mcnemar.csv`, `friedman.csv` and `ranks.csv`.
pub fn write_significance(dir: &Path, s: &SignificanceReport, critical_difference: Option<f64>) -> Result<()> {
    let k = s.models.len();
    let mut header = vec!["model".to_string()];
    header.extend(s.models.iter().cloned());
    let rows: Vec<Vec<String>> = (0..k)
        .map(|a| {
            let mut r = vec![s.models[a].clone()];
            r.extend((0..k).map(|b| {
                if a == b {
                    "1".to_string()
                } else {
                    let p = s.mcnemar_p[a][b];
                    format!("{}{}", p_value(p), significance_marker(p))
                }
            }));
            r
        })
        .collect();
    write_rows(&dir.join("significance.csv"), &header, &rows)?;

    let mut rows = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let p = s.mcnemar_p[a][b];
            rows.push(vec![
                s.models[a].clone(),
                s.models[b].clone(),
                f(s.mcnemar_chi2[a][b]),
                p_value(p),
                significance_marker(p).to_string(),
            ]);
        }
    }
    write_rows(&dir.join("mcnemar.csv"), &strings(&["model_a", "model_b", "chi2", "p", "marker"]), &rows)?;

    write_rows(
        &dir.join("friedman.csv"),
        &strings(&["chi2", "p", "k_models", "input", "critical_difference"]),
        &[vec![
            f(s.friedman_chi2),
            p_value(s.friedman_p),
            k.to_string(),
            s.friedman_input.clone(),
            critical_difference.map(f).unwrap_or_default(),
        ]],
    )?;

    let rows: Vec<Vec<String>> =
        s.models.iter().zip(&s.avg_ranks).map(|(m, r)| vec![m.clone(), f(*r)]).collect();
    write_rows(&dir.join("ranks.csv"), &strings(&["model", "avg_rank"]), &rows)
}

/// `model,clean,snr_<level>db...,robustness_index`.
pub fn write_noise_table(path: &Path, t: &NoiseTable) -> Result<()> {
    let mut header = strings(&["model", "clean"]);
    header.extend(t.levels_db.iter().map(|&l| level_name(l)));
    header.push("robustness_index".into());
    let rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.model.clone(), f(r.clean_f1)];
            row.extend(r.level_f1.iter().map(|v| f(*v)));
            row.push(f(r.robustness_index));
            row
        })
        .collect();
    write_rows(path, &header, &rows)
}

pub fn write_predictions(path: &Path, class_names: &[String], records: &[PredictionRecord]) -> Result<()> {
    let mut header = strings(&["model", "sample_id", "split", "fold", "label", "predicted"]);
    header.extend(class_names.iter().map(|c| format!("p_{c}")));
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.model.clone(),
                r.sample_id.clone(),
                r.split.as_str().to_string(),
                r.fold.map(|v| v.to_string()).unwrap_or_default(),
                r.label.to_string(),
                r.predicted.to_string(),
            ];
            row.extend(r.probs.iter().map(|p| format!("{p:e}")));
            row
        })
        .collect();
    write_rows(path, &header, &rows)
}

/// Parse a `predictions.csv`. Returns class names (from the `p_` columns)
/// and records in file order.
pub fn read_predictions(path: &Path) -> Result<(Vec<String>, Vec<PredictionRecord>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
    let header = r.headers()?.clone();
    let fixed = ["model", "sample_id", "split", "fold", "label", "predicted"];
    if header.len() < fixed.len() + 2 || header.iter().take(fixed.len()).ne(fixed.iter().copied()) {
        return Err(Error::Csv(format!("{}: not a predictions file", path.display())));
    }
    let class_names: Vec<String> = header
        .iter()
        .skip(fixed.len())
        .map(|h| h.strip_prefix("p_").map(String::from).ok_or_else(|| Error::Csv(format!("bad column {h:?}"))))
        .collect::<Result<_>>()?;
    let bad = |line: usize, what: &str| Error::Csv(format!("{} line {}: bad {what}", path.display(), line + 2));
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize, what: &str| rec[i].parse::<usize>().map_err(|_| bad(line, what));
        let fold = if rec[3].is_empty() { None } else { Some(num(3, "fold")?) };
        let probs = (fixed.len()..rec.len())
            .map(|i| rec[i].parse::<f64>().map_err(|_| bad(line, "probability")))
            .collect::<Result<Vec<_>>>()?;
        let label = num(4, "label")?;
        let predicted = num(5, "predicted")?;
        if label >= class_names.len() || predicted >= class_names.len() {
            return Err(bad(line, "class index"));
        }
        out.push(PredictionRecord {
            model: rec[0].to_string(),
            sample_id: rec[1].to_string(),
            split: Split::parse(&rec[2])?,
            fold,
            label,
            predicted,
            probs,
        });
    }
    Ok((class_names, out))
}

/// McNemar on the pooled out-of-fold predictions and Friedman on per-fold
/// macro-F1, folds as blocks.
pub fn significance_from_predictions(class_count: usize, records: &[PredictionRecord]) -> Result<SignificanceReport> {
    let mut models: Vec<String> = Vec::new();
    for r in records {
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    if models.len() < 2 {
        return Err(Error::invalid("significance needs at least two models"));
    }
    // model -> sample_id -> (fold, label, predicted)
    let mut cv: Vec<BTreeMap<&str, (usize, usize, usize)>> = vec![BTreeMap::new(); models.len()];
    for r in records.iter().filter(|r| r.split == Split::Cv) {
        let m = models.iter().position(|n| *n == r.model).unwrap_or(0);
        let fold = r.fold.ok_or_else(|| Error::Csv(format!("cv row for {} has no fold", r.sample_id)))?;
        cv[m].insert(&r.sample_id, (fold, r.label, r.predicted));
    }
    let ids: Vec<&str> = cv[0].keys().copied().collect();
    if ids.is_empty() {
        return Err(Error::invalid("no cross-validation predictions"));
    }
    if cv.iter().any(|c| c.len() != ids.len() || !c.keys().copied().eq(ids.iter().copied())) {
        return Err(Error::invalid("models were not evaluated on the same cross-validation samples"));
    }
    let correct: Vec<Vec<bool>> =
        cv.iter().map(|c| ids.iter().map(|id| c[id].1 == c[id].2).collect()).collect();
    let n_folds = cv[0].values().map(|v| v.0).max().unwrap_or(0) + 1;
    let mut performance = vec![vec![0.0; models.len()]; n_folds];
    for (m, c) in cv.iter().enumerate() {
        for (fold, row) in performance.iter_mut().enumerate() {
            let (y, p): (Vec<usize>, Vec<usize>) =
                c.values().filter(|v| v.0 == fold).map(|v| (v.1, v.2)).unzip();
            if y.is_empty() {
                return Err(Error::invalid(format!("fold {fold} has no predictions")));
            }
            row[m] = classification_metrics(&ConfusionMatrix::from_predictions(&y, &p, class_count)?)?.f1;
        }
    }
    SignificanceReport::build(
        models,
        &correct,
        &performance,
        format!("per-fold macro-F1, {n_folds} folds as blocks"),
    )
}

fn per_class_rows(model: &str, split: &str, classes: &[String], scores: &[ClassScores]) -> Vec<Vec<String>> {
    scores
        .iter()
        .zip(classes)
        .map(|(s, c)| {
            vec![
                model.to_string(),
                split.to_string(),
                c.clone(),
                f(s.precision),
                f(s.recall),
                f(s.f1),
                s.support.to_string(),
            ]
        })
        .collect()
}

pub fn per_class(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<Vec<ClassScores>> {
    Ok(per_class_scores(&ConfusionMatrix::from_predictions(y_true, y_pred, classes)?))
}

impl ReportBundle {
    pub fn model(&self, name: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.name == name)
    }

    /// Write every table plus the manifest into `dir`. Returns the written
    /// paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str| {
            let p = dir.join(name);
            written.push(p.clone());
            p
        };

        fs::write(put("config.toml"), &self.config_toml)?;

        let rows: Vec<Vec<String>> = self
            .split_counts
            .iter()
            .zip(&self.class_names)
            .enumerate()
            .map(|(i, (c, name))| {
                vec![
                    i.to_string(),
                    name.clone(),
                    c.total.to_string(),
                    c.cv.to_string(),
                    c.validation.to_string(),
                    c.holdout.to_string(),
                ]
            })
            .collect();
        write_rows(&put("dataset.csv"), &strings(&["class_index", "class", "total", "cv", "validation", "holdout"]), &rows)?;

        let mut header = strings(&["model", "kind", "folds"]);
        for n in Scores::NAMES {
            header.push(format!("{n}_mean"));
            header.push(format!("{n}_std"));
        }
        header.push("validation_f1".into());
        header.extend(Scores::NAMES.iter().map(|n| format!("holdout_{n}")));
        let rows: Vec<Vec<String>> = self
            .models
            .iter()
            .map(|m| {
                let mut r = vec![m.name.clone(), m.kind.label().to_string(), m.folds.len().to_string()];
                for (a, b) in m.mean.values().iter().zip(m.std.values()) {
                    r.push(f(*a));
                    r.push(f(b));
                }
                r.push(m.validation.map(|s| f(s.f1)).unwrap_or_default());
                match m.holdout {
                    Some(h) => r.extend(h.values().iter().map(|v| f(*v))),
                    None => r.extend(vec![String::new(); 6]),
                }
                r
            })
            .collect();
        write_rows(&put("metrics.csv"), &header, &rows)?;

        let mut header = strings(&["model", "fold"]);
        header.extend(strings(&Scores::NAMES));
        let rows: Vec<Vec<String>> = self
            .models
            .iter()
            .flat_map(|m| {
                m.folds.iter().enumerate().map(move |(k, s)| {
                    let mut r = vec![m.name.clone(), k.to_string()];
                    r.extend(s.values().iter().map(|v| f(*v)));
                    r
                })
            })
            .collect();
        write_rows(&put("fold_metrics.csv"), &header, &rows)?;

        let mut rows = Vec::new();
        for m in &self.models {
            rows.extend(per_class_rows(&m.name, "cv", &self.class_names, &m.cv_per_class));
            rows.extend(per_class_rows(&m.name, "holdout", &self.class_names, &m.holdout_per_class));
        }
        write_rows(
            &put("per_class.csv"),
            &strings(&["model", "split", "class", "precision", "recall", "f1", "support"]),
            &rows,
        )?;

        write_predictions(&put("predictions.csv"), &self.class_names, &self.predictions)?;

        if let Some(s) = &self.significance {
            for n in ["significance.csv", "mcnemar.csv", "friedman.csv", "ranks.csv"] {
                put(n);
            }
            write_significance(dir, s, self.critical_difference)?;
        }

        if let Some(t) = &self.noise {
            write_noise_table(&put("noise.csv"), t)?;
        }

        if let Some(imp) = &self.importance {
            let rows: Vec<Vec<String>> = FeatureRegistry
                .entries()
                .map(|e| {
                    vec![
                        e.id.to_string(),
                        e.name.to_string(),
                        e.domain.as_str().to_string(),
                        format!("{:e}", imp.importances[e.id]),
                    ]
                })
                .collect();
            write_rows(&put("importance.csv"), &strings(&["feature_id", "name", "domain", "importance"]), &rows)?;
            let rows: Vec<Vec<String>> = imp
                .by_domain
                .iter()
                .map(|d| vec![d.domain.as_str().to_string(), f(d.importance), d.features.to_string()])
                .collect();
            write_rows(&put("importance_by_domain.csv"), &strings(&["domain", "importance", "features"]), &rows)?;
        }

        FeatureRegistry.write_csv(fs::File::create(put("registry.csv"))?)?;

        if let Some(t) = &self.timing {
            let rows: Vec<Vec<String>> = t
                .iter()
                .map(|r| {
                    vec![
                        r.model.clone(),
                        format!("{:.6}", r.timing.training_seconds),
                        format!("{:.6}", r.timing.prediction_ms_per_sample),
                        f(r.timing.training_cv),
                        f(r.timing.prediction_cv),
                        r.timing.repetitions.to_string(),
                    ]
                })
                .collect();
            write_rows(
                &put("timing.csv"),
                &strings(&[
                    "model",
                    "training_seconds",
                    "prediction_ms_per_sample",
                    "training_cv",
                    "prediction_cv",
                    "repetitions",
                ]),
                &rows,
            )?;
        }

        let manifest = self.manifest(&written)?;
        let path = dir.join("manifest.txt");
        fs::write(&path, manifest)?;
        written.push(path);
        Ok(written)
    }

    fn manifest(&self, files: &[PathBuf]) -> Result<String> {
        let mut m = String::new();
        let mut line = |k: &str, v: &str| {
            m.push_str(k);
            m.push_str(": ");
            m.push_str(v);
            m.push('\n');
        };
        line("format", REPORT_FORMAT);
        line("registry_version", &self.registry_version);
        line("seed", &self.seed.to_string());
        line("config_sha256", &self.config_hash);
        line("data", &self.provenance);
        line("classes", &self.class_names.join(", "));
        line("models", &self.models.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join(", "));
        line(
            "splits",
            &format!(
                "hold-out {} and validation {} are fractions of the total corpus, carved per class before folding; \
                 the remaining pool is split into {} stratified folds",
                self.holdout_fraction, self.validation_fraction, self.n_folds
            ),
        );
        line(
            "final_models",
            "fit once on the whole cross-validation pool; the validation split is scored only; \
             the hold-out split is scored once",
        );
        line("scaling", "z-score fitted on the training part of each fold, and on the pool for final models");
        if let Some(s) = &self.significance {
            line("friedman_input", &s.friedman_input);
            line("mcnemar_input", "pooled out-of-fold cross-validation predictions");
        }
        if self.noise.is_some() {
            line("noise", "white Gaussian noise added to the raw hold-out recordings; one noise draw per recording, rescaled per level");
        }
        if let Some(i) = &self.importance {
            line("importance_source", &i.source);
        }
        line("std", "sample standard deviation over folds (n - 1)");
        for p in files {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name == "timing.csv" {
                line("file", "timing.csv wall-clock, not reproducible");
                continue;
            }
            let bytes = fs::read(p)?;
            line("file", &format!("{name} sha256 {}", hex::encode(Sha256::digest(&bytes))));
        }
        Ok(m)
    }
}
