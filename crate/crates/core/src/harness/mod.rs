//! Experiment harness: ingestion, Monte Carlo splits, multi-run experiments,
//! result tables, model files, timing summaries and the Wilcoxon
//! signed-rank test.

mod config;
mod dataset_io;
mod experiment;
mod model_file;
mod splits;
mod stats;
mod timing;

pub use config::{Ablation, ExperimentSpec};
pub use dataset_io::{load_dataset, parse_dataset};
pub use experiment::{
    method_labels, read_final_table, run_experiment, ExperimentReport, FinalRow, RunFailure, WilcoxonRow, FINAL_COLUMNS,
    GENERATION_COLUMNS,
};
pub use model_file::{parse_model, write_model, MODEL_FORMAT_VERSION};
pub use splits::{format_splits, monte_carlo_splits, prepare_split, split_for_run, Split};
pub use stats::{wilcoxon_signed_rank, WilcoxonMode, WilcoxonResult, EXACT_MAX_N};
pub use timing::{timing_report, MeanStd, TimingSummary};
