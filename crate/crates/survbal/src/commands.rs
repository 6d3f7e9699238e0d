//! One function per subcommand. Each writes its artifacts plus a
//! manifest into the output directory.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use survbal_core::data::{MergeMap, OTHERS};
use survbal_core::eval::{run_experiment_with, ExperimentReport, ExperimentSpec, NamedModel, NamedSampler};
use survbal_core::models::{self, FitConfig, Model};
use survbal_core::rng::derive_seed;
use survbal_core::sampling::{run_pipeline, Origin, SamplerSpec};
use survbal_core::stats::{association_matrix, screen_by_anova};
use survbal_core::synth::{generate_blobs, generate_categorical, BlobConfig, CatGenConfig};

use crate::config::{no_sampling, RunConfig, SynthConfig, SynthKind};
use crate::error::{CliError, CliResult};
use crate::exec::Runner;
use crate::io::{self, fmt_f64, fmt_opt, Artifacts};
use crate::manifest;
use crate::prepare::{prepare, Prepared};

const SAMPLE_STREAM: u64 = 1;
const MODEL_STREAM: u64 = 2;

fn out_dir(cfg: &RunConfig) -> PathBuf {
    PathBuf::from(&cfg.output)
}

fn finish(art: &mut Artifacts, command: &str, cfg: &RunConfig, inputs: &[&Path]) -> CliResult<()> {
    manifest::finish(art, command, Some(cfg.seed), cfg.to_value(), inputs)?;
    Ok(())
}

/// Apply screening to the prepared data when the config asks for it.
fn screened(cfg: &RunConfig) -> CliResult<Prepared> {
    let mut p = prepare(cfg)?;
    if cfg.screening.apply {
        if let Some(d) = &p.dataset {
            let kept = screen_by_anova(d, cfg.screening.alpha)?.kept();
            if kept.is_empty() {
                return Err(CliError::Runtime(anyhow::anyhow!("screening at alpha {} kept no features", cfg.screening.alpha)));
            }
            p.project(&kept)?;
        }
    }
    Ok(p)
}

pub fn preprocess(cfg: &RunConfig) -> CliResult<()> {
    let p = prepare(cfg)?;
    let mut art = Artifacts::create(&out_dir(cfg))?;
    let mut header = p.feature_names.clone();
    header.push("label".into());
    let rows: Vec<Vec<String>> = (0..p.set.len())
        .map(|i| {
            let mut r = p.render(&p.set, i);
            r.push(p.set.labels[i].to_string());
            r
        })
        .collect();
    art.write_csv("dataset.csv", &header, &rows)?;
    art.write_json("preprocess.json", &p.log)?;
    finish(&mut art, "preprocess", cfg, &[&p.input_path])
}

pub fn screen(cfg: &RunConfig) -> CliResult<()> {
    let p = prepare(cfg)?;
    let d = p
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::config("input.format", "screening needs categorical features"))?;
    let report = screen_by_anova(d, cfg.screening.alpha)?;
    let assoc = association_matrix(d)?;
    let mut art = Artifacts::create(&out_dir(cfg))?;
    let header: Vec<String> = ["feature", "f_stat", "p_value", "decision"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|e| {
            let (f, pv) = match &e.anova {
                Some(a) if a.is_infinite() => ("inf".to_string(), fmt_f64(a.p_value)),
                Some(a) => (fmt_f64(a.f_stat), fmt_f64(a.p_value)),
                None => (String::new(), String::new()),
            };
            let decision = serde_json::to_value(e.decision).expect("decision").as_str().unwrap_or_default().to_string();
            vec![e.feature.clone(), f, pv, decision]
        })
        .collect();
    art.write_csv("screening.csv", &header, &rows)?;
    let mut header = vec!["feature".to_string()];
    header.extend(assoc.features.iter().cloned());
    let rows: Vec<Vec<String>> = (0..assoc.features.len())
        .map(|i| {
            let mut r = vec![assoc.features[i].clone()];
            r.extend((0..assoc.features.len()).map(|j| fmt_f64(assoc.get(i, j))));
            r
        })
        .collect();
    art.write_csv("association.csv", &header, &rows)?;
    art.write_json("screening.json", &report)?;
    finish(&mut art, "screen", cfg, &[&p.input_path])
}

fn provenance(o: &Origin) -> String {
    match o {
        Origin::Original(i) => format!("original:{i}"),
        Origin::Synthetic(i) => format!("synthetic:{i}"),
    }
}

fn selected_sampler(cfg: &RunConfig, name: Option<&String>, key: &str) -> CliResult<NamedSampler> {
    Ok(match name {
        Some(n) => cfg.sampler(n, key)?.clone(),
        None => no_sampling(),
    })
}

pub fn sample(cfg: &RunConfig) -> CliResult<()> {
    let sampler = match &cfg.sample.sampler {
        Some(n) => cfg.sampler(n, "sample.sampler")?.clone(),
        None => cfg.samplers.first().cloned().ok_or_else(|| CliError::config("sampler", "no sampler defined"))?,
    };
    let p = screened(cfg)?;
    let spec = SamplerSpec {
        stages: sampler.stages.clone(),
        metric: p.metric(cfg.sampling.metric)?,
        seed: derive_seed(cfg.seed, &[SAMPLE_STREAM]),
    };
    let out = run_pipeline(&spec, &p.set)?;
    let mut art = Artifacts::create(&out_dir(cfg))?;
    let mut header = p.feature_names.clone();
    header.push("label".into());
    header.push("provenance".into());
    let rows: Vec<Vec<String>> = (0..out.set.len())
        .map(|i| {
            let mut r = p.render(&out.set, i);
            r.push(out.set.labels[i].to_string());
            r.push(provenance(&out.set.origin[i]));
            r
        })
        .collect();
    art.write_csv("sampled.csv", &header, &rows)?;
    #[derive(Serialize)]
    struct SampleLog<'a> {
        sampler: &'a str,
        input_size: usize,
        output_size: usize,
        synthetic: usize,
        stages: &'a [survbal_core::sampling::StageLog],
    }
    art.write_json(
        "sample_log.json",
        &SampleLog {
            sampler: &sampler.name,
            input_size: p.set.len(),
            output_size: out.set.len(),
            synthetic: out.set.synthetic_count(),
            stages: &out.log,
        },
    )?;
    finish(&mut art, "sample", cfg, &[&p.input_path])
}

pub const MODEL_FORMAT: &str = "survbal-model";
pub const MODEL_VERSION: u32 = 1;

/// Serialized model with everything needed to score new CSV rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub seed: u64,
    pub config: FitConfig,
    pub sampler: NamedSampler,
    pub features: Vec<String>,
    /// Per-feature vocabularies; absent for numeric models.
    pub vocab: Option<Vec<Vec<String>>>,
    pub merge: Option<MergeMap>,
    pub training_rows: usize,
    pub resampled_rows: usize,
    pub model: Model,
}

pub fn train(cfg: &RunConfig, runner: &Runner) -> CliResult<()> {
    let entry = match &cfg.train.model {
        Some(n) => cfg.model(n, "train.model")?.clone(),
        None => cfg.models.first().cloned().ok_or_else(|| CliError::config("model", "no model defined"))?,
    };
    let sampler = selected_sampler(cfg, cfg.train.sampler.as_ref(), "train.sampler")?;
    let p = screened(cfg)?;
    let spec = SamplerSpec {
        stages: sampler.stages.clone(),
        metric: p.metric(cfg.sampling.metric)?,
        seed: derive_seed(cfg.seed, &[SAMPLE_STREAM]),
    };
    let out = run_pipeline(&spec, &p.set)?;
    let model = models::fit(&entry.config, &out.set, &p.encoding, derive_seed(cfg.seed, &[MODEL_STREAM]), runner)?;
    let doc = ModelDocument {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        name: entry.name.clone(),
        seed: cfg.seed,
        config: entry.config.clone(),
        sampler,
        features: p.feature_names.clone(),
        vocab: p.vocab.clone(),
        merge: p.log.merge.clone(),
        training_rows: p.set.len(),
        resampled_rows: out.set.len(),
        model,
    };
    let mut art = Artifacts::create(&out_dir(cfg))?;
    art.write_json("model.json", &doc)?;
    finish(&mut art, "train", cfg, &[&p.input_path])
}

pub fn load_model(path: &Path) -> CliResult<ModelDocument> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let doc: ModelDocument = serde_json::from_str(&text)
        .map_err(|e| CliError::config("model", format!("{}: not a model document: {e}", path.display())))?;
    if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
        return Err(CliError::config("model", format!("unsupported model format {} v{}", doc.format, doc.version)));
    }
    doc.model.validate()?;
    Ok(doc)
}

/// Encode raw CSV rows with the training vocabularies. Categories merged
/// into the catch-all during training, or never seen, map to it when the
/// vocabulary has one.
fn encode_rows(doc: &ModelDocument, table: &survbal_core::data::RawTable) -> CliResult<Vec<f64>> {
    let idx: Vec<usize> = doc.features.iter().map(|f| table.column_index(f)).collect::<survbal_core::Result<_>>()?;
    let mut values = Vec::with_capacity(table.len() * idx.len());
    for (i, r) in table.rows.iter().enumerate() {
        for (j, &c) in idx.iter().enumerate() {
            let cell = r[c].trim();
            let v = match &doc.vocab {
                None => cell
                    .parse::<f64>()
                    .map_err(|_| anyhow::anyhow!("row {i}: \"{cell}\" in column \"{}\" is not numeric", doc.features[j]))?,
                Some(vocab) => {
                    let merged = doc
                        .merge
                        .as_ref()
                        .and_then(|m| m.features.iter().find(|f| f.feature == doc.features[j]))
                        .and_then(|f| f.mapping.get(cell))
                        .map(String::as_str)
                        .unwrap_or(cell);
                    let pos = vocab[j]
                        .iter()
                        .position(|v| v == merged)
                        .or_else(|| vocab[j].iter().position(|v| v == OTHERS))
                        .ok_or_else(|| {
                            anyhow::anyhow!("row {i}: unknown category \"{cell}\" for feature \"{}\"", doc.features[j])
                        })?;
                    pos as f64
                }
            };
            values.push(v);
        }
    }
    Ok(values)
}

pub fn predict(model_path: &Path, input: &Path, threshold: f64, out: &Path) -> CliResult<()> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::config("threshold", "must lie in [0, 1]"));
    }
    let doc = load_model(model_path)?;
    let table = io::load_csv(input)?;
    let values = encode_rows(&doc, &table)?;
    let proba = models::predict_proba(&doc.model, &values)?;
    let mut art = Artifacts::create(out)?;
    let header: Vec<String> = ["row", "probability", "prediction"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = proba
        .iter()
        .enumerate()
        .map(|(i, &p)| vec![i.to_string(), fmt_f64(p), ((p >= threshold) as u8).to_string()])
        .collect();
    art.write_csv("predictions.csv", &header, &rows)?;
    let config = serde_json::json!({ "model": model_path.display().to_string(), "input": input.display().to_string(), "threshold": threshold });
    manifest::finish(&mut art, "predict", Some(doc.seed), config, &[model_path, input])?;
    Ok(())
}

pub const REPORT_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub rows: usize,
    pub features: Vec<String>,
    pub positives: usize,
}

/// Full evaluation record: config echo, data summary, per-fold results
/// with stage sizes, and summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub report: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub data: DataSummary,
    pub preprocess: crate::prepare::PreprocessLog,
    pub experiment: ExperimentReport,
}

pub const REPORT_COLUMNS: [&str; 7] = ["model", "sampler", "fold", "accuracy", "sensitivity", "specificity", "f1"];

/// Rows of report.csv: the k fold rows of each cell followed by its
/// summary row (`mean`, or `pooled`), models outer and samplers inner.
pub fn report_rows(report: &ExperimentReport) -> Vec<Vec<String>> {
    let summary_label = match report.aggregation {
        survbal_core::eval::Aggregation::Mean => "mean",
        survbal_core::eval::Aggregation::Pooled => "pooled",
    };
    let mut rows = Vec::new();
    for cell in &report.cells {
        let base = || vec![cell.model.clone(), cell.sampler.clone()];
        if cell.error.is_some() {
            let mut r = base();
            r.push("error".into());
            r.extend(std::iter::repeat_n(String::new(), 4));
            rows.push(r);
            continue;
        }
        for f in &cell.folds {
            let mut r = base();
            r.push((f.fold + 1).to_string());
            r.extend(f.metrics.values().iter().map(|v| fmt_opt(*v)));
            rows.push(r);
        }
        if let Some(s) = &cell.summary {
            let mut r = base();
            r.push(summary_label.into());
            r.extend(s.values().iter().map(|v| fmt_opt(*v)));
            rows.push(r);
        }
    }
    rows
}

fn write_report_csv(art: &mut Artifacts, report: &ExperimentReport) -> CliResult<()> {
    let header: Vec<String> = REPORT_COLUMNS.map(String::from).to_vec();
    art.write_csv("report.csv", &header, &report_rows(report))?;
    Ok(())
}

pub fn experiment_spec(cfg: &RunConfig, metric: survbal_core::neighbors::Metric) -> CliResult<ExperimentSpec> {
    let samplers: Vec<NamedSampler> = if !cfg.evaluation.samplers.is_empty() {
        cfg.evaluation.samplers.iter().map(|n| cfg.sampler(n, "evaluation.samplers").cloned()).collect::<CliResult<_>>()?
    } else if cfg.samplers.is_empty() {
        vec![no_sampling()]
    } else {
        cfg.samplers.clone()
    };
    let entries = if cfg.evaluation.models.is_empty() {
        cfg.models.clone()
    } else {
        cfg.evaluation.models.iter().map(|n| cfg.model(n, "evaluation.models").cloned()).collect::<CliResult<_>>()?
    };
    if entries.is_empty() {
        return Err(CliError::config("model", "at least one [[model]] is required"));
    }
    Ok(ExperimentSpec {
        samplers,
        models: entries.into_iter().map(|m| NamedModel { name: m.name, config: m.config }).collect(),
        metric,
        k: cfg.evaluation.k,
        seed: cfg.seed,
        threshold: cfg.evaluation.threshold,
        aggregation: cfg.evaluation.aggregation,
        resample_before_cv: cfg.evaluation.resample_before_cv,
    })
}

pub fn evaluate(cfg: &RunConfig, runner: &Runner) -> CliResult<ReportDocument> {
    let p = screened(cfg)?;
    let spec = experiment_spec(cfg, p.metric(cfg.sampling.metric)?)?;
    let experiment = run_experiment_with(&spec, &p.set, &p.encoding, runner)?;
    let doc = ReportDocument {
        report: REPORT_VERSION.into(),
        seed: cfg.seed,
        config: cfg.to_value(),
        data: DataSummary { rows: p.set.len(), features: p.feature_names.clone(), positives: p.set.count(1) },
        preprocess: p.log.clone(),
        experiment,
    };
    let mut art = Artifacts::create(&out_dir(cfg))?;
    write_report_csv(&mut art, &doc.experiment)?;
    art.write_json("report.json", &doc)?;
    finish(&mut art, "evaluate", cfg, &[&p.input_path])?;
    Ok(doc)
}

/// Rebuild report.csv from a report.json and return an aligned text table
/// of the summary rows.
pub fn report(input: &Path, out: &Path) -> CliResult<String> {
    let text = std::fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let doc: ReportDocument = serde_json::from_str(&text)
        .map_err(|e| CliError::config("input", format!("{}: not a report: {e}", input.display())))?;
    let mut art = Artifacts::create(out)?;
    write_report_csv(&mut art, &doc.experiment)?;
    let header: Vec<String> = REPORT_COLUMNS.map(String::from).to_vec();
    let summary: Vec<Vec<String>> =
        report_rows(&doc.experiment).into_iter().filter(|r| matches!(r[2].as_str(), "mean" | "pooled" | "error")).collect();
    art.write_csv("summary.csv", &header, &summary)?;
    manifest::finish(&mut art, "report", Some(doc.seed), doc.config.clone(), &[input])?;

    let mut table = vec![header];
    table.extend(summary.into_iter().map(|r| {
        r.into_iter()
            .enumerate()
            .map(|(j, c)| if j >= 3 { c.parse::<f64>().map(|v| format!("{v:.4}")).unwrap_or(c) } else { c })
            .collect()
    }));
    let widths: Vec<usize> = (0..REPORT_COLUMNS.len()).map(|j| table.iter().map(|r| r[j].len()).max().unwrap_or(0)).collect();
    let mut lines = String::new();
    for r in &table {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        lines.push_str(cells.join("  ").trim_end());
        lines.push('\n');
    }
    Ok(lines)
}

pub fn synth(cfg: &RunConfig) -> CliResult<()> {
    let s: SynthConfig = cfg.synth.clone().unwrap_or_default();
    let mut art = Artifacts::create(&out_dir(cfg))?;
    let (header, rows, minority) = match s.kind {
        SynthKind::Blobs => {
            let set = generate_blobs(&BlobConfig { n: s.n, minority_frac: s.minority_frac, overlap: s.overlap, seed: cfg.seed })
                .map_err(|e| crate::error::in_section("synth", e))?;
            let rows: Vec<Vec<String>> = (0..set.len())
                .map(|i| vec![fmt_f64(set.row(i)[0]), fmt_f64(set.row(i)[1]), set.labels[i].to_string()])
                .collect();
            (vec!["x1".to_string(), "x2".into(), "label".into()], rows, set.count(1))
        }
        SynthKind::Categorical => {
            let d = generate_categorical(&CatGenConfig {
                n: s.n,
                n_features: s.features,
                categories: s.categories,
                minority_frac: s.minority_frac,
                signal_strength: s.signal,
                seed: cfg.seed,
            })
            .map_err(|e| crate::error::in_section("synth", e))?;
            let t = d.decode();
            (t.columns, t.rows, d.labels.iter().filter(|&&l| l == 1).count())
        }
    };
    art.write_csv("synth.csv", &header, &rows)?;
    art.write_json("synth.json", &serde_json::json!({ "seed": cfg.seed, "synth": s, "rows": rows.len(), "minority": minority }))?;
    finish(&mut art, "synth", cfg, &[])
}
