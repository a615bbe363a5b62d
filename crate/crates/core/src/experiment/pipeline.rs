//! The end-to-end run: data, preprocessing, features, cross-validation,
//! final fit, hold-out scoring, significance, noise sweep, importance and
//! timing.

use rayon::prelude::*;

use super::config::{DataSource, ExperimentConfig, Normalization, PreprocessConfig};
use super::corpus::{read_corpus, Corpus};
use super::report::{
    per_class, ImportanceReport, ModelReport, NoiseRow, NoiseTable, PredictionRecord, ReportBundle, Scores, Split,
    SplitCounts, TimingRow,
};
use crate::dataset::{Dataset, FeatureMatrix};
use crate::error::{Error, Result, StageContext};
use crate::eval::{cv, nemenyi_critical_difference, CvPlan, SignificanceReport};
use crate::features::{extract_batch, Standardizer, REGISTRY_VERSION};
use crate::learners::{
    argmax, compose_ensemble, fit, measure_timing, Fitted, ModelKind, ModelParams, ModelSpec, RandomForest,
    RfParams, TrainedModel,
};
use crate::preprocess::{spectral_subtract, NoiseProfile, SUBTRACTION_WINDOW};
use crate::rng::derive_seed;
use crate::signal::{normalize_amplitude, normalize_rms, AudioSignal};
use crate::synth::{add_noise_at_snr, generate_dataset, robustness_index};

/// Named, seeded model list.
#[derive(Debug, Clone, PartialEq)]
pub struct Roster {
    pub names: Vec<String>,
    pub specs: Vec<ModelSpec>,
}

impl Roster {
    /// Names are the kind labels, numbered from the second repeat on
    /// (`RF`, `RF-2`, ...).
    pub fn new(models: &[ModelParams], seed: u64) -> Self {
        let mut names = Vec::new();
        for m in models {
            let label = m.kind().label();
            let seen = names.iter().filter(|n: &&String| n.split('-').next() == Some(label)).count();
            names.push(if seen == 0 { label.to_string() } else { format!("{label}-{}", seen + 1) });
        }
        let specs = models
            .iter()
            .enumerate()
            .map(|(i, p)| ModelSpec::new(p.clone(), derive_seed(seed, "model", i as u64)))
            .collect();
        Self { names, specs }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Fit every model on one training set. `cell` separates the seed
    /// streams of different folds. Ensemble members whose parameters equal a
    /// stand-alone roster entry reuse that fitted model.
    pub fn fit_all(&self, x: &FeatureMatrix, y: &[usize], classes: usize, cell: u64) -> Result<Vec<TrainedModel>> {
        let seeded = |i: usize| ModelSpec::new(self.specs[i].params.clone(), derive_seed(self.specs[i].seed, "cell", cell));
        let singles: Vec<Option<TrainedModel>> = (0..self.len())
            .into_par_iter()
            .map(|i| match self.specs[i].kind() {
                ModelKind::Ensemble => Ok(None),
                _ => fit(&seeded(i), x, y, classes).map(Some),
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            if let Some(m) = &singles[i] {
                out.push(m.clone());
                continue;
            }
            let spec = seeded(i);
            let ModelParams::Ensemble(p) = &spec.params else { unreachable!() };
            let members = p
                .members
                .par_iter()
                .enumerate()
                .map(|(j, member)| {
                    let reuse = (0..self.len()).find(|&k| singles[k].is_some() && self.specs[k].params == *member);
                    match reuse {
                        Some(k) => Ok(singles[k].clone().expect("checked above")),
                        None => fit(&ModelSpec::new(member.clone(), derive_seed(spec.seed, "member", j as u64)), x, y, classes),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(compose_ensemble(&spec, members)?);
        }
        Ok(out)
    }
}

/// Spectral subtraction (noise estimated from the leading stretch of the
/// recording) followed by the configured normalization.
pub fn preprocess_signal(x: &AudioSignal, p: &PreprocessConfig) -> Result<AudioSignal> {
    let mut y = match p.subtraction_alpha {
        Some(alpha) => {
            let profile = NoiseProfile::estimate(x, p.noise_lead_s, SUBTRACTION_WINDOW)?;
            spectral_subtract(x, &profile, alpha)?
        }
        None => x.clone(),
    };
    y = match p.normalization {
        Normalization::None => y,
        Normalization::Amplitude => normalize_amplitude(&y)?,
        Normalization::Rms => normalize_rms(&y)?,
    };
    Ok(y)
}

pub fn preprocess_all(signals: &[AudioSignal], p: &PreprocessConfig) -> Result<Vec<AudioSignal>> {
    signals.par_iter().map(|x| preprocess_signal(x, p)).collect()
}

/// Generate or load the recordings named by the configuration.
pub fn load_source(cfg: &ExperimentConfig) -> Result<Corpus> {
    match &cfg.data {
        DataSource::Synthetic(_) => {
            let g = cfg.generator().expect("synthetic source");
            Ok(generate_dataset(&g)?.into())
        }
        DataSource::Wav(w) => read_corpus(&w.dir, &w.labels, w.permissive),
    }
}

/// Everything the noise sweep needs besides the models.
pub struct SweepInputs<'a> {
    /// Raw (unprocessed) test recordings.
    pub signals: &'a [AudioSignal],
    pub labels: &'a [usize],
    pub class_count: usize,
    pub standardizer: &'a Standardizer,
    pub preprocess: &'a PreprocessConfig,
    /// Noise for recording `i` is drawn from `derive_seed(seed, "noise", i)`
    /// at every level.
    pub seed: u64,
}

fn macro_f1(models: &[&TrainedModel], x: &FeatureMatrix, y: &[usize], classes: usize) -> Result<Vec<f64>> {
    models
        .iter()
        .map(|m| {
            let pred = m.predict(x)?;
            let cm = crate::eval::ConfusionMatrix::from_predictions(y, &pred, classes)?;
            Ok(crate::eval::classification_metrics(&cm)?.f1)
        })
        .collect()
}

/// Re-score clean-trained models on noisy copies of the test recordings.
/// The clean condition is scored first; the robustness index is the mean of
/// the clean and all noisy F1 values.
pub fn run_noise_sweep(models: &[(String, TrainedModel)], inputs: &SweepInputs<'_>, levels_db: &[f64]) -> Result<NoiseTable> {
    if inputs.signals.len() != inputs.labels.len() {
        return Err(Error::LengthMismatch { expected: inputs.labels.len(), actual: inputs.signals.len() });
    }
    let refs: Vec<&TrainedModel> = models.iter().map(|(_, m)| m).collect();
    let score = |level: f64| -> Result<Vec<f64>> {
        let noisy = inputs
            .signals
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let n = add_noise_at_snr(x, level, derive_seed(inputs.seed, "noise", i as u64))?;
                preprocess_signal(&n, inputs.preprocess)
            })
            .collect::<Result<Vec<_>>>()?;
        let x = inputs.standardizer.transform(&extract_batch(&noisy)?)?;
        macro_f1(&refs, &x, inputs.labels, inputs.class_count)
    };
    let clean = score(f64::INFINITY)?;
    let by_level = levels_db.iter().map(|&l| score(l)).collect::<Result<Vec<_>>>()?;
    let rows = models
        .iter()
        .enumerate()
        .map(|(m, (name, _))| {
            let level_f1: Vec<f64> = by_level.iter().map(|v| v[m]).collect();
            let mut all = vec![clean[m]];
            all.extend(&level_f1);
            Ok(NoiseRow { model: name.clone(), clean_f1: clean[m], level_f1, robustness_index: robustness_index(&all)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NoiseTable { levels_db: levels_db.to_vec(), rows })
}

struct FoldResult {
    test: Vec<usize>,
    /// `probs[model][k]` for test sample `k`.
    probs: Vec<Vec<Vec<f64>>>,
}

fn scaled(x: &FeatureMatrix, train: &[usize], apply: &[&[usize]]) -> Result<(FeatureMatrix, Standardizer, Vec<FeatureMatrix>)> {
    let s = Standardizer::fit(&x.select_rows(train))?;
    let tr = s.transform(&x.select_rows(train))?;
    let rest = apply.iter().map(|idx| s.transform(&x.select_rows(idx))).collect::<Result<Vec<_>>>()?;
    Ok((tr, s, rest))
}

fn pick<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

/// Data, features, split plan and roster: the shared front half of every run.
pub struct Prepared {
    pub corpus: Corpus,
    pub data: Dataset,
    pub plan: CvPlan,
    pub roster: Roster,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate().stage("config")?;
    let corpus = load_source(cfg).stage("data")?;
    let cleaned = preprocess_all(&corpus.signals, &cfg.preprocess).stage("preprocess")?;
    let data = corpus.extract_from(&cleaned).stage("features")?;
    let plan = cv::plan(&data.labels, &cfg.cv, derive_seed(cfg.seed, "cv", 0)).stage("cv")?;
    let roster = Roster::new(&cfg.models, cfg.seed);
    Ok(Prepared { corpus, data, plan, roster })
}

struct FinalFit {
    xpool: FeatureMatrix,
    scaler: Standardizer,
    xval: FeatureMatrix,
    xhold: FeatureMatrix,
    models: Vec<TrainedModel>,
}

fn final_fit(p: &Prepared) -> Result<FinalFit> {
    let pool = p.plan.pool_indices();
    log::info!("fitting final models on {} pool samples", pool.len());
    let (xpool, scaler, mut rest) =
        scaled(&p.data.features, &pool, &[&p.plan.validation_indices(), &p.plan.holdout_indices()])?;
    let xhold = rest.pop().expect("two sets");
    let xval = rest.pop().expect("two sets");
    let models = p.roster.fit_all(&xpool, &pick(&p.data.labels, &pool), p.data.class_count(), u64::MAX)?;
    Ok(FinalFit { xpool, scaler, xval, xhold, models })
}

fn sweep(cfg: &ExperimentConfig, p: &Prepared, fin: &FinalFit) -> Result<Option<NoiseTable>> {
    let holdout = p.plan.holdout_indices();
    if cfg.noise.levels_db.is_empty() || holdout.is_empty() {
        if !cfg.noise.levels_db.is_empty() {
            log::warn!("noise sweep needs a hold-out split; skipped");
        }
        return Ok(None);
    }
    log::info!("noise sweep over {:?} dB", cfg.noise.levels_db);
    let named: Vec<(String, TrainedModel)> = p.roster.names.iter().cloned().zip(fin.models.iter().cloned()).collect();
    let signals = pick(&p.corpus.signals, &holdout);
    let labels = pick(&p.data.labels, &holdout);
    let inputs = SweepInputs {
        signals: &signals,
        labels: &labels,
        class_count: p.data.class_count(),
        standardizer: &fin.scaler,
        preprocess: &cfg.preprocess,
        seed: derive_seed(cfg.seed, "noise-sweep", 0),
    };
    run_noise_sweep(&named, &inputs, &cfg.noise.levels_db).map(Some)
}

/// Only the noise-robustness table: final fit on the pool, then the sweep
/// over the hold-out recordings.
pub fn execute_noise(cfg: &ExperimentConfig) -> Result<NoiseTable> {
    let p = prepare(cfg)?;
    let fin = final_fit(&p).stage("train")?;
    sweep(cfg, &p, &fin)
        .stage("noise")?
        .ok_or_else(|| Error::Config("noise sweep needs noise levels and a non-empty hold-out split".into()))
}

/// Run the full experiment without writing anything.
pub fn execute(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let prep = prepare(cfg)?;
    let Prepared { corpus, data, plan, roster } = &prep;
    let classes = data.class_count();
    let y = &data.labels;
    let pool = plan.pool_indices();
    let validation = plan.validation_indices();
    let holdout = plan.holdout_indices();

    log::info!("cross-validating {} models over {} folds", roster.len(), plan.n_folds);
    let folds: Vec<FoldResult> = (0..plan.n_folds)
        .into_par_iter()
        .map(|k| {
            let train = plan.train_indices(k);
            let test = plan.test_indices(k);
            let (xtr, _, rest) = scaled(&data.features, &train, &[&test])?;
            let models = roster.fit_all(&xtr, &pick(y, &train), classes, k as u64)?;
            let probs = models.iter().map(|m| m.predict_proba_matrix(&rest[0])).collect::<Result<Vec<_>>>()?;
            Ok(FoldResult { test, probs })
        })
        .collect::<Result<_>>()
        .stage("train")?;

    let fin = final_fit(&prep).stage("train")?;
    let FinalFit { xpool, xval, xhold, models: finals, .. } = &fin;

    let mut predictions = Vec::new();
    let mut models = Vec::new();
    let mut cv_correct = Vec::new();
    let mut performance = vec![vec![0.0; roster.len()]; plan.n_folds];
    (|| -> Result<()> {
        for (m, name) in roster.names.iter().enumerate() {
            let mut fold_scores = Vec::new();
            let mut oof: Vec<Option<(usize, Vec<f64>)>> = vec![None; data.len()];
            for (k, fr) in folds.iter().enumerate() {
                let s = Scores::evaluate(&pick(y, &fr.test), &fr.probs[m], classes)?;
                performance[k][m] = s.f1;
                fold_scores.push(s);
                for (t, &i) in fr.test.iter().enumerate() {
                    oof[i] = Some((k, fr.probs[m][t].clone()));
                }
            }
            let (mean, std) = Scores::mean_std(&fold_scores);
            let mut record = |i: usize, split: Split, fold: Option<usize>, probs: Vec<f64>| {
                predictions.push(PredictionRecord {
                    model: name.clone(),
                    sample_id: data.sample_ids[i].clone(),
                    split,
                    fold,
                    label: y[i],
                    predicted: argmax(&probs),
                    probs,
                })
            };
            let mut correct = Vec::with_capacity(pool.len());
            let mut oof_pred = Vec::with_capacity(pool.len());
            for &i in &pool {
                let (k, p) = oof[i].clone().expect("every pool sample is tested once");
                correct.push(argmax(&p) == y[i]);
                oof_pred.push(argmax(&p));
                record(i, Split::Cv, Some(k), p);
            }
            cv_correct.push(correct);
            let mut split_scores = |idx: &[usize], x: &FeatureMatrix, split: Split| -> Result<Option<(Scores, Vec<usize>)>> {
                if idx.is_empty() {
                    return Ok(None);
                }
                let probs = finals[m].predict_proba_matrix(x)?;
                let s = Scores::evaluate(&pick(y, idx), &probs, classes)?;
                let pred = probs.iter().map(|p| argmax(p)).collect();
                for (&i, p) in idx.iter().zip(probs) {
                    record(i, split, None, p);
                }
                Ok(Some((s, pred)))
            };
            let val = split_scores(&validation, xval, Split::Validation)?;
            let hold = split_scores(&holdout, xhold, Split::Holdout)?;
            models.push(ModelReport {
                name: name.clone(),
                kind: roster.specs[m].kind(),
                folds: fold_scores,
                mean,
                std,
                validation: val.map(|v| v.0),
                holdout_per_class: match &hold {
                    Some((_, pred)) => per_class(&pick(y, &holdout), pred, classes)?,
                    None => Vec::new(),
                },
                holdout: hold.map(|h| h.0),
                cv_per_class: per_class(&pick(y, &pool), &oof_pred, classes)?,
            });
        }
        Ok(())
    })()
    .stage("evaluate")?;

    let significance = if roster.len() >= 2 {
        Some(
            SignificanceReport::build(
                roster.names.clone(),
                &cv_correct,
                &performance,
                format!("per-fold macro-F1, {} folds as blocks", plan.n_folds),
            )
            .stage("significance")?,
        )
    } else {
        log::warn!("significance tests need at least two models; skipped");
        None
    };
    let critical_difference =
        cfg.reports.nemenyi_q_alpha.map(|q| nemenyi_critical_difference(q, roster.len(), plan.n_folds));

    let noise = sweep(cfg, &prep, &fin).stage("noise")?;

    let importance = (|| -> Result<ImportanceReport> {
        let found = roster.names.iter().zip(finals).find_map(|(n, m)| match &m.model {
            Fitted::Rf(rf) => Some((n.clone(), rf.importances.clone())),
            _ => None,
        });
        Ok(match found {
            Some((name, imp)) => ImportanceReport::new(format!("final {name} model"), imp),
            None => {
                let rf = RandomForest::fit(&RfParams::default(), xpool, &pick(y, &pool), classes, derive_seed(cfg.seed, "importance", 0))?;
                ImportanceReport::new("default random forest fitted on the pool for attribution", rf.importances)
            }
        })
    })()
    .stage("importance")?;

    let timing = if cfg.reports.timing {
        let queries = if holdout.is_empty() { xpool } else { xhold };
        let rows = roster
            .names
            .iter()
            .zip(&roster.specs)
            .map(|(name, spec)| {
                log::info!("timing {name}");
                let t = measure_timing(spec, xpool, &pick(y, &pool), classes, queries, cfg.reports.timing_repetitions)?;
                Ok(TimingRow { model: name.clone(), timing: t })
            })
            .collect::<Result<Vec<_>>>()
            .stage("timing")?;
        Some(rows)
    } else {
        None
    };

    let mut split_counts = vec![SplitCounts::default(); classes];
    for (i, &c) in y.iter().enumerate() {
        let s = &mut split_counts[c];
        s.total += 1;
        if plan.holdout_mask[i] {
            s.holdout += 1;
        } else if plan.validation_mask[i] {
            s.validation += 1;
        } else {
            s.cv += 1;
        }
    }

    let mut canonical = cfg.clone();
    canonical.out_dir = Default::default();
    Ok(ReportBundle {
        config_toml: canonical.to_toml().stage("config")?,
        config_hash: cfg.hash().stage("config")?,
        seed: cfg.seed,
        registry_version: REGISTRY_VERSION.to_string(),
        provenance: corpus.provenance.clone(),
        class_names: data.class_names.clone(),
        split_counts,
        n_folds: plan.n_folds,
        holdout_fraction: cfg.cv.holdout_fraction,
        validation_fraction: cfg.cv.validation_fraction,
        models,
        predictions,
        significance,
        critical_difference,
        noise,
        importance: Some(importance),
        timing,
    })
}

/// Run the experiment and write the report bundle to `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    let bundle = execute(cfg)?;
    bundle.write(&cfg.out_dir).stage("report")?;
    Ok(bundle)
}
