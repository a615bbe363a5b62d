//! Configuration-driven orchestration of the whole benchmark.

pub mod config;
pub mod corpus;
pub mod pipeline;
pub mod report;

pub use config::{DataSource, ExperimentConfig, Normalization, NoiseConfig, PreprocessConfig, ReportConfig, WavSource};
pub use corpus::{load_corpus, read_corpus, write_corpus, Corpus};
pub use pipeline::{execute, execute_noise, load_source, prepare, Prepared, preprocess_all, preprocess_signal, run_experiment, run_noise_sweep, Roster, SweepInputs};
pub use report::{
    read_predictions, significance_from_predictions, write_predictions, write_significance, ModelReport, NoiseRow,
    NoiseTable, PredictionRecord, ReportBundle, Scores, Split, DETERMINISTIC_FILES,
    write_noise_table,
};
