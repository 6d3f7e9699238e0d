//! From input CSV plus config to an encoded data set.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use survbal_core::data::{
    derive_survival_label, drop_incomplete, encode_labeled, filter_range, label_histogram, merge_rare_categories, Dataset,
    FeatureSpec, HorizonSpec, LabelHistogram, MergeMap, RawTable, Schema,
};
use survbal_core::models::EncodingMap;
use survbal_core::neighbors::{ColumnKind, Metric};
use survbal_core::sampling::SampleSet;

use crate::config::{InputFormat, MetricChoice, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeLog {
    pub column: String,
    pub min: f64,
    pub max: f64,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonLog {
    pub years: u32,
    pub cutoff_months: u32,
    pub cutoff_inclusive: bool,
}

/// Sidecar describing what preprocessing did to the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessLog {
    pub format: InputFormat,
    pub rows_read: usize,
    pub dropped_missing: usize,
    pub range_filters: Vec<RangeLog>,
    pub merge: Option<MergeMap>,
    pub horizon: Option<HorizonLog>,
    pub rows_kept: usize,
    pub labels: LabelHistogram,
}

pub struct Prepared {
    pub input_path: PathBuf,
    pub feature_names: Vec<String>,
    /// Per-feature vocabularies; `None` for numeric data.
    pub vocab: Option<Vec<Vec<String>>>,
    pub dataset: Option<Dataset>,
    pub set: SampleSet,
    pub encoding: EncodingMap,
    pub log: PreprocessLog,
}

impl Prepared {
    pub fn is_categorical(&self) -> bool {
        self.vocab.is_some()
    }

    /// Neighbor metric for the samplers.
    pub fn metric(&self, choice: MetricChoice) -> CliResult<Metric> {
        Ok(match (choice, self.is_categorical()) {
            (MetricChoice::Auto, true) | (MetricChoice::Hamming, true) => Metric::Hamming,
            (MetricChoice::Auto, false) | (MetricChoice::Euclidean, _) => Metric::Euclidean,
            (MetricChoice::Hamming, false) => {
                return Err(CliError::config("sampling.metric", "hamming requires categorical features"))
            }
            (MetricChoice::Heom, _) => Metric::heom_from_data(self.set.columns.clone(), &self.set.values),
        })
    }

    /// Restrict a categorical data set to `keep`.
    pub fn project(&mut self, keep: &[String]) -> CliResult<()> {
        let Some(d) = &self.dataset else { return Ok(()) };
        let d = d.project(keep)?;
        self.rebuild(d)
    }

    fn rebuild(&mut self, d: Dataset) -> CliResult<()> {
        let (set, encoding) = categorical_parts(&d)?;
        self.feature_names = d.feature_names.clone();
        self.vocab = Some(d.vocab.clone());
        self.set = set;
        self.encoding = encoding;
        self.dataset = Some(d);
        Ok(())
    }

    /// Text rendering of a (possibly resampled) row for CSV output.
    pub fn render(&self, set: &SampleSet, i: usize) -> Vec<String> {
        set.row(i)
            .iter()
            .enumerate()
            .map(|(j, &v)| match &self.vocab {
                Some(vocab) => vocab[j][v as usize].clone(),
                None => io::fmt_f64(v),
            })
            .collect()
    }
}

fn categorical_parts(d: &Dataset) -> CliResult<(SampleSet, EncodingMap)> {
    let set = SampleSet::from_dataset(d);
    let cards: Vec<usize> = d.vocab.iter().map(|v| v.len()).collect();
    let encoding = EncodingMap::for_columns(&set.columns, &cards)?;
    Ok((set, encoding))
}

pub fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    let input = cfg.input()?;
    let path = PathBuf::from(&input.path);
    let table = io::load_csv(&path)?;
    let rows_read = table.len();

    let label_col = match input.format {
        InputFormat::Survival => cfg
            .schema
            .label_source
            .clone()
            .ok_or_else(|| CliError::config("schema.label_source", "required for the survival format"))?,
        _ => input.label.clone(),
    };
    let features: Vec<FeatureSpec> = if cfg.schema.features.is_empty() {
        table.columns.iter().filter(|c| **c != label_col).map(|c| FeatureSpec::new(c.clone())).collect()
    } else {
        cfg.schema.features.iter().map(|f| f.spec()).collect()
    };
    if features.is_empty() {
        return Err(CliError::config("schema.features", "no feature columns"));
    }
    if features.iter().any(|f| f.name == label_col) {
        return Err(CliError::config("schema.features", format!("\"{label_col}\" is the label column")));
    }
    let names: Vec<String> = features.iter().map(|f| f.name.clone()).collect();

    let mut needed = names.clone();
    needed.push(label_col.clone());
    for r in &cfg.preprocess.range {
        if !needed.contains(&r.column) {
            needed.push(r.column.clone());
        }
    }
    let table = io::project(&table, &needed)?;
    let (mut table, dropped_missing) = drop_incomplete(&table, &cfg.schema.missing_tokens);
    let mut range_filters = Vec::new();
    for (i, r) in cfg.preprocess.range.iter().enumerate() {
        let (t, dropped) = filter_range(&table, &r.column, r.min, r.max)
            .map_err(|e| crate::error::in_section(&format!("preprocess.range[{i}]"), e))?;
        table = t;
        range_filters.push(RangeLog { column: r.column.clone(), min: r.min, max: r.max, dropped });
    }
    if table.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!("no rows left after preprocessing {}", path.display())));
    }

    let mut merge = None;
    let mut horizon = None;
    if input.format != InputFormat::Numeric && cfg.preprocess.merge_rare {
        let (t, map) = merge_rare_categories(&table, &names, cfg.preprocess.merge_threshold)?;
        table = t;
        merge = Some(map);
    }
    let (dataset, set, encoding) = match input.format {
        InputFormat::Survival => {
            let schema = Schema { features, label_source: label_col, missing_tokens: cfg.schema.missing_tokens.clone() };
            schema.validate()?;
            let h = HorizonSpec::new(cfg.preprocess.horizon_years)?;
            horizon = Some(HorizonLog {
                years: h.years(),
                cutoff_months: h.cutoff_months(),
                cutoff_inclusive: cfg.preprocess.cutoff_inclusive,
            });
            let d = derive_survival_label(&table, &schema, h, cfg.preprocess.cutoff_inclusive)?;
            let (s, e) = categorical_parts(&d)?;
            (Some(d), s, e)
        }
        InputFormat::Categorical => {
            let d = encode_labeled(&table, &features, &label_col)?;
            let (s, e) = categorical_parts(&d)?;
            (Some(d), s, e)
        }
        InputFormat::Numeric => {
            let set = numeric_set(&table, &names, &label_col)?;
            (None, set, EncodingMap::identity(names.len()))
        }
    };
    let log = PreprocessLog {
        format: input.format,
        rows_read,
        dropped_missing,
        range_filters,
        merge,
        horizon,
        rows_kept: set.len(),
        labels: label_histogram(&set.labels),
    };
    Ok(Prepared {
        input_path: path,
        feature_names: names,
        vocab: dataset.as_ref().map(|d| d.vocab.clone()),
        dataset,
        set,
        encoding,
        log,
    })
}

fn numeric_set(table: &RawTable, names: &[String], label_col: &str) -> survbal_core::Result<SampleSet> {
    let idx: Vec<usize> = names.iter().map(|n| table.column_index(n)).collect::<survbal_core::Result<_>>()?;
    let m = table.column_index(label_col)?;
    let mut values = Vec::with_capacity(table.len() * names.len());
    let mut labels = Vec::with_capacity(table.len());
    for (i, r) in table.rows.iter().enumerate() {
        for (&j, name) in idx.iter().zip(names) {
            let v: f64 = r[j].trim().parse().map_err(|_| survbal_core::Error::Parse {
                row: i,
                message: format!("\"{}\" in column \"{name}\" is not numeric", r[j]),
            })?;
            values.push(v);
        }
        labels.push(match r[m].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(survbal_core::Error::Parse { row: i, message: format!("label \"{other}\" is not 0 or 1") })
            }
        });
    }
    SampleSet::new(vec![ColumnKind::Numeric; names.len()], values, labels)
}
