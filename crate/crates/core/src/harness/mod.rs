//! Experiment orchestration: metrics, significance testing, fuzzy fusion
//! of FI tables and the end-to-end benchmark runner.

pub mod config;
pub mod experiment;
pub mod fusion;
pub mod metrics;

pub use config::{CustomDataset, DatasetChoice, ExperimentConfig};
pub use experiment::{
    format_summary, read_results, run_cell, run_experiment, significance, summarize, write_results, CellOutcome,
    EvaluationRow, ExperimentOutcome, SignificanceRow, Strategy, SubsetOutcome,
};
pub use fusion::{fuzzy_fusion, FeatureAggregation, FuzzyFusion};
pub use metrics::{mae, rmse, wilcoxon_signed_rank};
