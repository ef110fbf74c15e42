//! Benchmark protocol: dataset ingestion, seeded splits into labeled,
//! unlabeled and out-of-sample parts, repeated runs and result files.

mod dataset;
mod experiment;
mod report;
mod split;

pub use dataset::{load_csv, read_feature_table, Dataset, FeatureTable};
pub use experiment::{
    run_experiment, run_single, ExperimentConfig, ExperimentReport, MethodSummary, RunFailure, RunRecord, Scores,
    Stat,
};
pub use report::{emit_report, flat_table, read_report, table_path_for, ResultDocument, FORMAT_VERSION};
pub use split::{make_split, split_sizes, Split, MAX_SPLIT_ATTEMPTS, UNLABELED_FRACTION};
