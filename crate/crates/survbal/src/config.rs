//! Run configuration: TOML with named sections, or the same schema as
//! JSON. A manifest written by a previous run is also accepted and its
//! embedded config is used.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use survbal_core::data::{default_missing_tokens, FeatureSpec};
use survbal_core::eval::{Aggregation, NamedSampler};
use survbal_core::models::FitConfig;
use survbal_core::sampling::SamplerStage;

use crate::error::{in_section, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. Required; there is no clock-derived default.
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: String,
    pub input: Option<InputConfig>,
    #[serde(default)]
    pub schema: SchemaConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub screening: ScreeningConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default, rename = "sampler")]
    pub samplers: Vec<NamedSampler>,
    #[serde(default, rename = "model")]
    pub models: Vec<ModelEntry>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub sample: SampleSelection,
    #[serde(default)]
    pub train: TrainSelection,
    pub synth: Option<SynthConfig>,
}

fn default_output() -> String {
    "out".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// Raw records with a survival-months column, labeled via the horizon.
    Survival,
    /// Categorical features plus a 0/1 label column.
    #[default]
    Categorical,
    /// Numeric features plus a 0/1 label column.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub path: String,
    #[serde(default)]
    pub format: InputFormat,
    /// Label column for the categorical and numeric formats.
    #[serde(default = "default_label")]
    pub label: String,
}

fn default_label() -> String {
    "label".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureEntry {
    Name(String),
    Spec(FeatureSpec),
}

impl FeatureEntry {
    pub fn spec(&self) -> FeatureSpec {
        match self {
            FeatureEntry::Name(n) => FeatureSpec::new(n.clone()),
            FeatureEntry::Spec(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    /// Feature columns; empty means every column except the label.
    #[serde(default)]
    pub features: Vec<FeatureEntry>,
    /// Survival-months column (survival format only).
    pub label_source: Option<String>,
    #[serde(default = "default_missing_tokens")]
    pub missing_tokens: Vec<String>,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig { features: Vec::new(), label_source: None, missing_tokens: default_missing_tokens() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeFilter {
    pub column: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub horizon_years: u32,
    /// Count death exactly at the cutoff month as within the horizon.
    pub cutoff_inclusive: bool,
    pub merge_rare: bool,
    pub merge_threshold: f64,
    pub range: Vec<RangeFilter>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { horizon_years: 5, cutoff_inclusive: false, merge_rare: true, merge_threshold: 0.02, range: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreeningConfig {
    pub alpha: f64,
    /// Drop screened-out features before training and evaluation.
    pub apply: bool,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig { alpha: 0.05, apply: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricChoice {
    /// Hamming for categorical data, Euclidean for numeric data.
    #[default]
    Auto,
    Euclidean,
    Hamming,
    Heom,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub metric: MetricChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: String,
    #[serde(flatten)]
    pub config: FitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub k: usize,
    pub threshold: f64,
    pub aggregation: Aggregation,
    pub resample_before_cv: bool,
    /// Sampler names to evaluate; empty means all.
    pub samplers: Vec<String>,
    /// Model names to evaluate; empty means all.
    pub models: Vec<String>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            k: 5,
            threshold: 0.5,
            aggregation: Aggregation::Mean,
            resample_before_cv: false,
            samplers: Vec::new(),
            models: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSelection {
    pub sampler: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSelection {
    pub model: Option<String>,
    pub sampler: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    #[default]
    Blobs,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub kind: SynthKind,
    pub n: usize,
    pub minority_frac: f64,
    pub overlap: f64,
    pub features: usize,
    pub categories: usize,
    pub signal: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { kind: SynthKind::Blobs, n: 1000, minority_frac: 0.104, overlap: 0.5, features: 5, categories: 4, signal: 0.5 }
    }
}

impl RunConfig {
    /// A config with only a seed; everything else at defaults.
    pub fn with_seed(seed: u64) -> Self {
        let v = serde_json::json!({ "seed": seed });
        serde_json::from_value(v).expect("defaults deserialize")
    }

    pub fn input(&self) -> CliResult<&InputConfig> {
        self.input.as_ref().ok_or_else(|| CliError::config("input", "an [input] section with `path` is required"))
    }

    pub fn sampler(&self, name: &str, key: &str) -> CliResult<&NamedSampler> {
        self.samplers
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::config(key, format!("unknown sampler \"{name}\"")))
    }

    pub fn model(&self, name: &str, key: &str) -> CliResult<&ModelEntry> {
        self.models.iter().find(|m| m.name == name).ok_or_else(|| CliError::config(key, format!("unknown model \"{name}\"")))
    }

    /// Cross-field checks that serde cannot express.
    pub fn validate(&self) -> CliResult<()> {
        let mut names = std::collections::BTreeSet::new();
        for (i, s) in self.samplers.iter().enumerate() {
            if !names.insert(&s.name) {
                return Err(CliError::config(format!("sampler[{i}].name"), format!("duplicate sampler \"{}\"", s.name)));
            }
            for (j, stage) in s.stages.iter().enumerate() {
                stage.validate().map_err(|e| in_section(&format!("sampler[{i}].stages[{j}]"), e))?;
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, m) in self.models.iter().enumerate() {
            if !names.insert(&m.name) {
                return Err(CliError::config(format!("model[{i}].name"), format!("duplicate model \"{}\"", m.name)));
            }
            m.config.validate().map_err(|e| in_section(&format!("model[{i}]"), e))?;
        }
        for (i, name) in self.evaluation.samplers.iter().enumerate() {
            self.sampler(name, &format!("evaluation.samplers[{i}]"))?;
        }
        for (i, name) in self.evaluation.models.iter().enumerate() {
            self.model(name, &format!("evaluation.models[{i}]"))?;
        }
        if let Some(name) = &self.sample.sampler {
            self.sampler(name, "sample.sampler")?;
        }
        if let Some(name) = &self.train.sampler {
            self.sampler(name, "train.sampler")?;
        }
        if let Some(name) = &self.train.model {
            self.model(name, "train.model")?;
        }
        if self.evaluation.k < 2 {
            return Err(CliError::config("evaluation.k", "must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.evaluation.threshold) {
            return Err(CliError::config("evaluation.threshold", "must lie in [0, 1]"));
        }
        if !(self.screening.alpha > 0.0 && self.screening.alpha < 1.0) {
            return Err(CliError::config("screening.alpha", "must lie in (0, 1)"));
        }
        if !(self.preprocess.merge_threshold > 0.0 && self.preprocess.merge_threshold < 1.0) {
            return Err(CliError::config("preprocess.merge_threshold", "must lie in (0, 1)"));
        }
        survbal_core::data::HorizonSpec::new(self.preprocess.horizon_years)?;
        for (i, r) in self.preprocess.range.iter().enumerate() {
            if !(r.min <= r.max) {
                return Err(CliError::config(format!("preprocess.range[{i}]"), "min must not exceed max"));
            }
        }
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Parse a TOML or JSON document (by extension) into a value tree.
pub fn read_value(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let value: Value = if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {}", path.display(), e.message())))?
    };
    match value {
        Value::Object(mut map) if map.contains_key("manifest") => {
            map.remove("config").ok_or_else(|| CliError::config("config", "manifest has no embedded config"))
        }
        other => Ok(other),
    }
}

/// Deserialize with the failing key path in the error.
pub fn from_value(value: Value) -> CliResult<RunConfig> {
    let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        let key = match field_in(&message) {
            Some(field) if path == "." => field.to_string(),
            Some(field) if !path.ends_with(field) => format!("{path}.{field}"),
            _ => path,
        };
        CliError::config(key, message)
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn field_in(message: &str) -> Option<&str> {
    for marker in ["missing field `", "unknown field `"] {
        if let Some(rest) = message.strip_prefix(marker) {
            return rest.split('`').next();
        }
    }
    None
}

pub fn load(path: &Path) -> CliResult<RunConfig> {
    from_value(read_value(path)?)
}

/// Stage list used when no sampler is selected.
pub fn no_sampling() -> NamedSampler {
    NamedSampler { name: "none".into(), stages: Vec::<SamplerStage>::new() }
}
