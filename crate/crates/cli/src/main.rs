//! `condmon`: synthetic corpora, feature tables and the full benchmark from
//! the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use condmon::error::StageContext;
use condmon::eval::nemenyi_critical_difference;
use condmon::experiment::{
    execute_noise, load_source, preprocess_all, read_corpus, read_predictions, run_experiment,
    significance_from_predictions, write_corpus, write_noise_table, write_significance, DataSource, ExperimentConfig,
    WavSource,
};
use condmon::features::REGISTRY_VERSION;

#[derive(Parser)]
#[command(name = "condmon", version, about = "Acoustic condition-monitoring benchmark")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML). Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Global seed; required unless the config file sets one.
    #[arg(long)]
    seed: Option<u64>,
    /// Output location.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus as WAV files plus labels.csv.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples_per_class: Option<usize>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Write the 127-column feature table of a corpus as CSV.
    Extract {
        #[command(flatten)]
        common: Common,
        /// WAV directory to read instead of the configured source.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Labels file for --input, relative to it unless absolute.
        #[arg(long, default_value = "labels.csv", requires = "input")]
        labels: PathBuf,
        /// Skip rows whose WAV file is missing.
        #[arg(long, requires = "input")]
        permissive: bool,
    },
    /// Full benchmark: cross-validation, hold-out, significance, noise,
    /// importance and timing.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Skip the wall-clock timing table.
        #[arg(long)]
        no_timing: bool,
    },
    /// Noise-robustness sweep only.
    Noise {
        #[command(flatten)]
        common: Common,
        /// SNR levels in dB, strictly decreasing (e.g. 40,30,20,10).
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
    /// Significance tests from a saved predictions.csv.
    Stats {
        /// predictions.csv written by `bench`.
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Nemenyi q_alpha for the critical difference.
        #[arg(long)]
        q_alpha: Option<f64>,
    },
}

fn config(common: &Common, out_is_dir: bool) -> Result<ExperimentConfig> {
    let out = out_is_dir.then_some(common.out.as_path());
    Ok(ExperimentConfig::load(common.config.as_deref(), common.seed, out).stage("config")?)
}

fn small_manifest(dir: &Path, cfg: &ExperimentConfig, what: &str) -> Result<()> {
    let text = format!(
        "registry_version: {REGISTRY_VERSION}\nseed: {}\nconfig_sha256: {}\ncontent: {what}\n",
        cfg.seed,
        cfg.hash()?
    );
    fs::write(dir.join("manifest.txt"), text).with_context(|| format!("writing {}", dir.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { common, samples_per_class, duration } => {
            let mut cfg = config(&common, true)?;
            let DataSource::Synthetic(g) = &mut cfg.data else {
                bail!("[config] synth needs a synthetic data source");
            };
            if let Some(n) = samples_per_class {
                g.samples_per_class = n;
            }
            if let Some(d) = duration {
                g.duration_s = d;
            }
            cfg.validate().stage("config")?;
            let corpus = load_source(&cfg).stage("data")?;
            let gain = write_corpus(&corpus, &common.out).stage("write")?;
            small_manifest(&common.out, &cfg, &format!("synthetic WAV corpus, {} files, gain {gain}", corpus.len()))?;
            println!("wrote {} recordings to {}", corpus.len(), common.out.display());
        }
        Command::Extract { common, input, labels, permissive } => {
            let mut cfg = config(&common, false)?;
            if let Some(dir) = input {
                cfg.data = DataSource::Wav(WavSource { dir, labels, permissive });
            }
            let corpus = match &cfg.data {
                DataSource::Wav(w) => read_corpus(&w.dir, &w.labels, w.permissive).stage("data")?,
                DataSource::Synthetic(_) => load_source(&cfg).stage("data")?,
            };
            let cleaned = preprocess_all(&corpus.signals, &cfg.preprocess).stage("preprocess")?;
            let data = corpus.extract_from(&cleaned).stage("features")?;
            if let Some(parent) = common.out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            let file = fs::File::create(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
            data.write_csv(file).stage("write")?;
            println!("wrote {} x {} features to {}", data.len(), data.features.cols(), common.out.display());
        }
        Command::Bench { common, no_timing } => {
            let mut cfg = config(&common, true)?;
            if no_timing {
                cfg.reports.timing = false;
            }
            let bundle = run_experiment(&cfg)?;
            for m in &bundle.models {
                println!("{:<10} macro-F1 {:.4} ± {:.4}", m.name, m.mean.f1, m.std.f1);
            }
            println!("reports in {}", cfg.out_dir.display());
        }
        Command::Noise { common, levels } => {
            let mut cfg = config(&common, true)?;
            if let Some(l) = levels {
                cfg.noise.levels_db = l;
            }
            cfg.reports.timing = false;
            cfg.validate().stage("config")?;
            let table = execute_noise(&cfg)?;
            fs::create_dir_all(&common.out)?;
            write_noise_table(&common.out.join("noise.csv"), &table).stage("report")?;
            small_manifest(&common.out, &cfg, "noise.csv")?;
            for r in &table.rows {
                println!("{:<10} robustness index {:.4}", r.model, r.robustness_index);
            }
        }
        Command::Stats { predictions, out, q_alpha } => {
            let (classes, records) = read_predictions(&predictions).stage("data")?;
            let report = significance_from_predictions(classes.len(), &records).stage("significance")?;
            let folds = records.iter().filter_map(|r| r.fold).max().map_or(0, |f| f + 1);
            let cd = q_alpha.map(|q| nemenyi_critical_difference(q, report.models.len(), folds));
            fs::create_dir_all(&out)?;
            write_significance(&out, &report, cd).stage("report")?;
            println!("Friedman chi2 {:.4}, p {:.4e}", report.friedman_chi2, report.friedman_p);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

