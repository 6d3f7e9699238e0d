use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::folds::{stratified_folds, FoldPlan};
use super::metrics::{compute_metrics, confusion, ConfusionMatrix, Metrics};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::models::{self, EncodingMap, FitConfig};
use crate::neighbors::Metric;
use crate::rng;
use crate::sampling::{run_pipeline, PipelineOutcome, SampleSet, SamplerSpec, SamplerStage, StageLog};

const FOLD_STREAM: u64 = 0;
const SAMPLER_STREAM: u64 = 1;
const MODEL_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSampler {
    pub name: String,
    #[serde(default)]
    pub stages: Vec<SamplerStage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedModel {
    pub name: String,
    pub config: FitConfig,
}

/// How fold results are summarized into one row per cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Arithmetic mean of the per-fold metrics.
    #[default]
    Mean,
    /// Metrics of the confusion matrix summed over folds.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub samplers: Vec<NamedSampler>,
    pub models: Vec<NamedModel>,
    pub metric: Metric,
    pub k: usize,
    pub seed: u64,
    pub threshold: f64,
    pub aggregation: Aggregation,
    /// Resample the whole data set before splitting. This leaks
    /// information into the test folds and is only useful for comparison.
    pub resample_before_cv: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samplers.is_empty() {
            return Err(Error::config("samplers", "at least one sampler is required"));
        }
        if self.models.is_empty() {
            return Err(Error::config("models", "at least one model is required"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::config("threshold", "must lie in [0, 1]"));
        }
        if self.k < 2 {
            return Err(Error::config("evaluation.k", "must be at least 2"));
        }
        self.metric.validate()?;
        for s in &self.samplers {
            for stage in &s.stages {
                stage.validate()?;
            }
        }
        for m in &self.models {
            m.config.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub train_size: usize,
    pub resampled_size: usize,
    pub test_size: usize,
    pub stages: Vec<StageLog>,
    /// No training row derives from a test row.
    pub leakage_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub model: String,
    pub sampler: String,
    pub folds: Vec<FoldResult>,
    pub summary: Option<Metrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub size: usize,
    pub positives: usize,
    /// Test row ids of the fold (indices into the evaluated data).
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub k: usize,
    pub threshold: f64,
    pub aggregation: Aggregation,
    pub resample_before_cv: bool,
    pub n_rows: usize,
    /// Folds of the input rows. In before-CV mode each sampler instead
    /// folds its own resampled set with the same seed.
    pub folds: Vec<FoldSummary>,
    pub sparse_classes: Vec<u8>,
    /// Cells ordered by model, then sampler, in declaration order.
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(&self, model: &str, sampler: &str) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.model == model && c.sampler == sampler)
    }
}

struct Split {
    train: SampleSet,
    test: SampleSet,
    stages: Vec<StageLog>,
    train_size: usize,
}

fn leakage_free(train: &SampleSet, test: &SampleSet) -> bool {
    let mut sources: Vec<usize> = test.origin.iter().map(|o| o.source()).collect();
    sources.sort_unstable();
    train.origin.iter().all(|o| sources.binary_search(&o.source()).is_err())
}

fn summarize(folds: &[FoldResult], aggregation: Aggregation) -> Metrics {
    match aggregation {
        Aggregation::Mean => Metrics::mean(folds.iter().map(|f| &f.metrics)),
        Aggregation::Pooled => {
            let mut total = ConfusionMatrix::default();
            for f in folds {
                total.add(&f.confusion);
            }
            compute_metrics(&total)
        }
    }
}

pub fn run_experiment(spec: &ExperimentSpec, data: &SampleSet, encoding: &EncodingMap) -> Result<ExperimentReport> {
    run_experiment_with(spec, data, encoding, &crate::exec::Sequential)
}

/// Stratified k-fold evaluation of every (sampler, model) pair.
///
/// Each fold's training split is resampled once per sampler and shared by
/// all models; the test split is never resampled. An error inside a cell
/// is recorded on that cell and the remaining cells still run.
pub fn run_experiment_with<E: Executor>(
    spec: &ExperimentSpec,
    data: &SampleSet,
    encoding: &EncodingMap,
    exec: &E,
) -> Result<ExperimentReport> {
    spec.validate()?;
    if encoding.input_width() != data.width() {
        return Err(Error::DimensionMismatch { expected: encoding.input_width(), found: data.width() });
    }
    let n_samplers = spec.samplers.len();
    let k = spec.k;

    // Before-CV mode resamples everything up front, so folds are drawn per
    // sampler over that sampler's output.
    let pre: Vec<Result<PipelineOutcome>> = if spec.resample_before_cv {
        exec.map_indexed(n_samplers, |s| {
            let sampler = SamplerSpec {
                stages: spec.samplers[s].stages.clone(),
                metric: spec.metric.clone(),
                seed: rng::derive_seed(spec.seed, &[SAMPLER_STREAM, s as u64]),
            };
            run_pipeline(&sampler, data)
        })
    } else {
        Vec::new()
    };

    let fold_seed = rng::derive_seed(spec.seed, &[FOLD_STREAM]);
    let plan = stratified_folds(&data.labels, k, fold_seed)?;
    let plans: Vec<Result<FoldPlan>> = if spec.resample_before_cv {
        pre.iter()
            .map(|p| match p {
                Ok(out) => stratified_folds(&out.set.labels, k, fold_seed),
                Err(e) => Err(e.clone()),
            })
            .collect()
    } else {
        Vec::new()
    };

    let splits: Vec<Result<Split>> = exec.map_indexed(n_samplers * k, |unit| {
        let (s, f) = (unit / k, unit % k);
        if spec.resample_before_cv {
            let out = pre[s].as_ref().map_err(Clone::clone)?;
            let plan = plans[s].as_ref().map_err(Clone::clone)?;
            let train = out.set.select(&plan.train_rows(f));
            return Ok(Split {
                train_size: train.len(),
                train,
                test: out.set.select(&plan.folds[f]),
                stages: out.log.clone(),
            });
        }
        let train = data.select(&plan.train_rows(f));
        let sampler = SamplerSpec {
            stages: spec.samplers[s].stages.clone(),
            metric: spec.metric.clone(),
            seed: rng::derive_seed(spec.seed, &[SAMPLER_STREAM, s as u64, f as u64]),
        };
        let out = run_pipeline(&sampler, &train)?;
        Ok(Split { train_size: train.len(), train: out.set, test: data.select(&plan.folds[f]), stages: out.log })
    });

    let n_models = spec.models.len();
    let results: Vec<Result<FoldResult>> = exec.map_indexed(n_models * n_samplers * k, |unit| {
        let m = unit / (n_samplers * k);
        let s = (unit / k) % n_samplers;
        let f = unit % k;
        let split = splits[s * k + f].as_ref().map_err(Clone::clone)?;
        let seed = rng::derive_seed(spec.seed, &[MODEL_STREAM, s as u64, m as u64, f as u64]);
        let model = models::fit(&spec.models[m].config, &split.train, encoding, seed, exec)?;
        let pred = models::predict(&model, &split.test.values, spec.threshold)?;
        let cm = confusion(&split.test.labels, &pred)?;
        Ok(FoldResult {
            fold: f,
            confusion: cm,
            metrics: compute_metrics(&cm),
            train_size: split.train_size,
            resampled_size: split.train.len(),
            test_size: split.test.len(),
            stages: split.stages.clone(),
            leakage_free: leakage_free(&split.train, &split.test),
        })
    });

    let mut results = results.into_iter();
    let mut cells = Vec::with_capacity(n_models * n_samplers);
    for m in &spec.models {
        for s in &spec.samplers {
            let mut folds = Vec::with_capacity(k);
            let mut error = None;
            for r in results.by_ref().take(k) {
                match r {
                    Ok(fr) => folds.push(fr),
                    Err(e) => {
                        if error.is_none() {
                            error = Some(e.to_string());
                        }
                    }
                }
            }
            if error.is_some() {
                folds.clear();
            }
            let summary = error.is_none().then(|| summarize(&folds, spec.aggregation));
            cells.push(CellReport { model: m.name.clone(), sampler: s.name.clone(), folds, summary, error });
        }
    }

    Ok(ExperimentReport {
        seed: spec.seed,
        k,
        threshold: spec.threshold,
        aggregation: spec.aggregation,
        resample_before_cv: spec.resample_before_cv,
        n_rows: data.len(),
        folds: plan
            .folds
            .iter()
            .map(|f| FoldSummary {
                size: f.len(),
                positives: f.iter().filter(|&&i| data.labels[i] == 1).count(),
                rows: f.clone(),
            })
            .collect(),
        sparse_classes: plan.sparse_classes.clone(),
        cells,
    })
}
