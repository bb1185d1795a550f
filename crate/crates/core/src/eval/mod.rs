//! Prequential evaluation and experiment orchestration.

mod config;
mod prequential;
mod report;
mod runner;

pub use config::{
    parse_config_text, AlgorithmKind, ExperimentConfig, Preset, StreamSource, CONFIG_KEYS, PRESETS,
};
pub use prequential::PrequentialWindow;
pub use report::{
    emit_csv, read_results, read_results_csv, summarize, write_drift_log, write_results, DriftRecord, ResultRow,
    Summary, RESULT_HEADER,
};
pub use runner::{prequential_run, run_experiment, run_experiment_detailed, ExperimentOutput, Model, RunOptions};
