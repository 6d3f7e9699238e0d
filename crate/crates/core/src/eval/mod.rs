//! Stratified cross-validation, confusion-matrix metrics and the
//! (sampler x model) experiment runner.

mod experiment;
mod folds;
mod metrics;

pub use experiment::{
    run_experiment, run_experiment_with, Aggregation, CellReport, ExperimentReport, ExperimentSpec, FoldResult,
    FoldSummary, NamedModel, NamedSampler,
};
pub use folds::{stratified_folds, FoldPlan};
pub use metrics::{compute_metrics, confusion, f1_harmonic, ConfusionMatrix, Metrics};
