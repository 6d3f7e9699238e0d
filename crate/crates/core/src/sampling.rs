//! Class-balancing stages: ENN, RENN and SMOTE, composed into ordered
//! pipelines.
//!
//! Removal stages (ENN, RENN) only ever delete rows of the majority class.
//! SMOTE appends synthetic minority rows after the untouched originals.
//! Inside a pipeline the majority label is fixed once, from the pipeline
//! input, so a stage that balances the classes does not flip which class
//! later stages clean.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::{ColumnKind, Metric, NeighborIndex};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "source")]
pub enum Origin {
    /// Row `id` of the set the pipeline started from.
    Original(usize),
    /// Synthesized from base row `id` (an original id).
    Synthetic(usize),
}

impl Origin {
    pub fn is_synthetic(&self) -> bool {
        matches!(self, Origin::Synthetic(_))
    }

    pub fn source(&self) -> usize {
        match *self {
            Origin::Original(i) | Origin::Synthetic(i) => i,
        }
    }
}

/// Row-major feature matrix with labels and per-row provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub columns: Vec<ColumnKind>,
    pub values: Vec<f64>,
    pub labels: Vec<u8>,
    pub origin: Vec<Origin>,
}

impl SampleSet {
    pub fn new(columns: Vec<ColumnKind>, values: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        let w = columns.len();
        if w == 0 {
            return Err(Error::input("sample set needs at least one column"));
        }
        if values.len() != w * labels.len() {
            return Err(Error::DimensionMismatch { expected: w * labels.len(), found: values.len() });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::input("labels must be 0 or 1"));
        }
        let origin = (0..labels.len()).map(Origin::Original).collect();
        Ok(SampleSet { columns, values, labels, origin })
    }

    pub fn numeric(width: usize, values: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        SampleSet::new(alloc::vec![ColumnKind::Numeric; width], values, labels)
    }

    /// Categorical codes as values; row `i` keeps origin id `i`.
    pub fn from_dataset(d: &Dataset) -> Self {
        SampleSet {
            columns: alloc::vec![ColumnKind::Categorical; d.n_features()],
            values: d.codes.iter().map(|&c| c as f64).collect(),
            labels: d.labels.clone(),
            origin: (0..d.n_rows()).map(Origin::Original).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn count(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Rows in the given order, provenance carried over.
    pub fn select(&self, rows: &[usize]) -> SampleSet {
        let mut values = Vec::with_capacity(rows.len() * self.width());
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        SampleSet {
            columns: self.columns.clone(),
            values,
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            origin: rows.iter().map(|&i| self.origin[i]).collect(),
        }
    }

    pub fn synthetic_count(&self) -> usize {
        self.origin.iter().filter(|o| o.is_synthetic()).count()
    }
}

/// Label with more rows (ties resolve to 0, the Survived class); `None`
/// unless both classes are present.
pub fn majority_label(labels: &[u8]) -> Option<u8> {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        None
    } else if pos > neg {
        Some(1)
    } else {
        Some(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoteMode {
    /// Per-feature vote among the base row and its neighbors for
    /// categorical columns; numeric columns are interpolated.
    Categorical,
    /// Interpolate every column.
    Continuous,
}

fn default_k() -> usize {
    5
}
fn default_max_iter() -> usize {
    100
}
fn default_ratio() -> f64 {
    1.0
}
fn default_mode() -> SmoteMode {
    SmoteMode::Categorical
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", deny_unknown_fields)]
pub enum SamplerStage {
    Enn {
        #[serde(default = "default_k")]
        k: usize,
        /// Remove only when all k neighbors disagree.
        #[serde(default)]
        strict_unanimous: bool,
    },
    Renn {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        #[serde(default)]
        strict_unanimous: bool,
    },
    Smote {
        #[serde(default = "default_k")]
        k: usize,
        /// Minority/majority ratio after synthesis.
        #[serde(default = "default_ratio")]
        target_ratio: f64,
        #[serde(default = "default_mode")]
        mode: SmoteMode,
    },
}

impl SamplerStage {
    pub fn enn() -> Self {
        SamplerStage::Enn { k: 5, strict_unanimous: false }
    }

    pub fn renn() -> Self {
        SamplerStage::Renn { k: 5, max_iter: 100, strict_unanimous: false }
    }

    pub fn smote(mode: SmoteMode) -> Self {
        SamplerStage::Smote { k: 5, target_ratio: 1.0, mode }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplerStage::Enn { .. } => "enn",
            SamplerStage::Renn { .. } => "renn",
            SamplerStage::Smote { .. } => "smote",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplerStage::Enn { k, .. } | SamplerStage::Renn { k, .. } | SamplerStage::Smote { k, .. } if k == 0 => {
                Err(Error::config("k", "must be at least 1"))
            }
            SamplerStage::Renn { max_iter: 0, .. } => Err(Error::config("max_iter", "must be at least 1")),
            SamplerStage::Smote { target_ratio, .. } if !(target_ratio > 0.0 && target_ratio <= 1.0) => {
                Err(Error::config("target_ratio", "must lie in (0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub stages: Vec<SamplerStage>,
    pub metric: Metric,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn none(metric: Metric, seed: u64) -> Self {
        SamplerSpec { stages: Vec::new(), metric, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnnOutcome {
    pub set: SampleSet,
    pub removed: usize,
    /// Input had a single class and was returned unchanged.
    pub single_class: bool,
}

/// One simultaneous editing pass (Wilson's rule restricted to the
/// majority class).
///
/// Every majority row whose k nearest neighbors (self excluded) mostly
/// carry the other label is removed; decisions are all taken against the
/// input set. A vote tie keeps the row. With `strict_unanimous` a row is
/// removed only when all k neighbors disagree. `majority` pins the class
/// being edited; `None` uses [`majority_label`].
pub fn enn(
    data: &SampleSet,
    k: usize,
    metric: &Metric,
    majority: Option<u8>,
    strict_unanimous: bool,
) -> Result<EnnOutcome> {
    let Some(target) = majority.or_else(|| majority_label(&data.labels)) else {
        return Ok(EnnOutcome { set: data.clone(), removed: 0, single_class: true });
    };
    if majority_label(&data.labels).is_none() {
        return Ok(EnnOutcome { set: data.clone(), removed: 0, single_class: true });
    }
    let n = data.len();
    if k == 0 || k > n - 1 {
        return Err(Error::KTooLarge { k, available: n - 1 });
    }
    let index = NeighborIndex::new(&data.values, data.width(), metric)?;
    let mut keep = Vec::with_capacity(n);
    for i in 0..n {
        let label = data.labels[i];
        if label != target {
            keep.push(i);
            continue;
        }
        let disagree = index.k_nearest(i, k)?.iter().filter(|nb| data.labels[nb.row] != label).count();
        let remove = if strict_unanimous { disagree == k } else { 2 * disagree > k };
        if !remove {
            keep.push(i);
        }
    }
    let removed = n - keep.len();
    let set = if removed == 0 { data.clone() } else { data.select(&keep) };
    Ok(EnnOutcome { set, removed, single_class: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RennOutcome {
    pub set: SampleSet,
    /// Rows removed by each pass; the last entry is 0 on convergence.
    pub removals: Vec<usize>,
    pub converged: bool,
    /// Stopped because the majority class ran out or became too small
    /// for another k-NN pass.
    pub exhausted: bool,
}

/// ENN repeated until a pass removes nothing or `max_iter` passes ran.
pub fn renn(
    data: &SampleSet,
    k: usize,
    max_iter: usize,
    metric: &Metric,
    majority: Option<u8>,
    strict_unanimous: bool,
) -> Result<RennOutcome> {
    let majority = majority.or_else(|| majority_label(&data.labels));
    let mut current = data.clone();
    let mut removals = Vec::new();
    let mut converged = false;
    let mut exhausted = false;
    for pass in 0..max_iter {
        if pass > 0 {
            let left = majority.map_or(0, |m| current.count(m));
            if left == 0 || current.len() < k + 1 {
                exhausted = true;
                break;
            }
        }
        let out = enn(&current, k, metric, majority, strict_unanimous)?;
        removals.push(out.removed);
        current = out.set;
        if out.removed == 0 {
            converged = true;
            break;
        }
    }
    Ok(RennOutcome { set: current, removals, converged, exhausted })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutcome {
    pub set: SampleSet,
    pub synthesized: usize,
}

/// Synthetic minority oversampling.
///
/// Appends rows until the minority count reaches
/// `ceil(target_ratio × majority)`. Base rows are taken round-robin over
/// a seeded shuffle of the minority rows; for each synthetic row one of
/// the base's k nearest minority neighbors is drawn uniformly. Numeric
/// columns (all columns in continuous mode) are placed at
/// `base + u·(neighbor − base)` with one `u ~ U[0,1)` per row. In
/// categorical mode categorical columns take the most frequent value
/// among the base and its k neighbors; ties prefer the base value, then
/// the drawn neighbor's value, then the smallest code.
pub fn smote(
    data: &SampleSet,
    k: usize,
    target_ratio: f64,
    mode: SmoteMode,
    metric: &Metric,
    minority: Option<u8>,
    rng: &mut StreamRng,
) -> Result<SmoteOutcome> {
    if !(target_ratio > 0.0 && target_ratio <= 1.0) {
        return Err(Error::config("target_ratio", "must lie in (0, 1]"));
    }
    let minority = match minority {
        Some(m) => m,
        None => match majority_label(&data.labels) {
            Some(maj) => 1 - maj,
            None => return Err(Error::Degenerate(String::from("cannot synthesize: single-class input"))),
        },
    };
    let minority_rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == minority).collect();
    let m = minority_rows.len();
    let majority_count = data.len() - m;
    let target = libm::ceil(target_ratio * majority_count as f64) as usize;
    if m >= target {
        return Ok(SmoteOutcome { set: data.clone(), synthesized: 0 });
    }
    if m < 2 {
        return Err(Error::Degenerate(alloc::format!("cannot synthesize from {m} minority row(s)")));
    }
    if k == 0 || k > m - 1 {
        return Err(Error::KTooLarge { k, available: m - 1 });
    }
    let w = data.width();
    let minority_set = data.select(&minority_rows);
    let index = NeighborIndex::new(&minority_set.values, w, metric)?;
    let neighbors: Vec<Vec<usize>> = (0..m)
        .map(|i| index.k_nearest(i, k).map(|nn| nn.iter().map(|nb| nb.row).collect()))
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..m).collect();
    rng::shuffle(rng, &mut order);

    let needed = target - m;
    let mut out = data.clone();
    out.values.reserve(needed * w);
    let mut row = alloc::vec![0.0; w];
    let mut votes: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for s in 0..needed {
        let base = order[s % m];
        let nb = neighbors[base][rng::index(rng, k)];
        let u = rng::uniform(rng);
        let (b, o) = (minority_set.row(base), minority_set.row(nb));
        for j in 0..w {
            let vote = mode == SmoteMode::Categorical && data.columns[j] == ColumnKind::Categorical;
            row[j] = if vote {
                votes.clear();
                for v in core::iter::once(base).chain(neighbors[base].iter().copied()) {
                    let value = minority_set.row(v)[j];
                    match votes.iter_mut().find(|(x, _)| *x == value) {
                        Some(e) => e.1 += 1,
                        None => votes.push((value, 1)),
                    }
                }
                let best = votes.iter().map(|e| e.1).max().unwrap_or(0);
                let tied = |x: f64| votes.iter().any(|&(v, c)| v == x && c == best);
                if tied(b[j]) {
                    b[j]
                } else if tied(o[j]) {
                    o[j]
                } else {
                    votes.iter().filter(|e| e.1 == best).map(|e| e.0).fold(f64::INFINITY, f64::min)
                }
            } else {
                b[j] + u * (o[j] - b[j])
            };
        }
        out.values.extend_from_slice(&row);
        out.labels.push(minority);
        out.origin.push(Origin::Synthetic(minority_set.origin[base].source()));
    }
    Ok(SmoteOutcome { set: out, synthesized: needed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: String,
    pub input_size: usize,
    pub output_size: usize,
    pub majority_count: usize,
    pub minority_count: usize,
    /// RENN removal counts per pass.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub passes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub set: SampleSet,
    pub log: Vec<StageLog>,
}

/// Apply the stages of `spec` in order. Stage `i` draws from the stream
/// derived from `(spec.seed, i)`.
pub fn run_pipeline(spec: &SamplerSpec, data: &SampleSet) -> Result<PipelineOutcome> {
    let majority = majority_label(&data.labels);
    let minority = majority.map(|m| 1 - m);
    let mut current = data.clone();
    let mut log = Vec::with_capacity(spec.stages.len());
    for (i, stage) in spec.stages.iter().enumerate() {
        let wrap = |e: Error| Error::Stage { index: i, source: alloc::boxed::Box::new(e) };
        stage.validate().map_err(wrap)?;
        let input_size = current.len();
        let mut passes = Vec::new();
        let mut flags = Vec::new();
        let next = match *stage {
            SamplerStage::Enn { k, strict_unanimous } => {
                let out = enn(&current, k, &spec.metric, majority, strict_unanimous).map_err(wrap)?;
                if out.single_class {
                    flags.push(String::from("single_class"));
                }
                out.set
            }
            SamplerStage::Renn { k, max_iter, strict_unanimous } => {
                let out = renn(&current, k, max_iter, &spec.metric, majority, strict_unanimous).map_err(wrap)?;
                passes = out.removals;
                if !out.converged {
                    flags.push(String::from("not_converged"));
                }
                if out.exhausted {
                    flags.push(String::from("majority_exhausted"));
                }
                out.set
            }
            SamplerStage::Smote { k, target_ratio, mode } => {
                let mut stream = rng::stream(spec.seed, &[i as u64]);
                smote(&current, k, target_ratio, mode, &spec.metric, minority, &mut stream).map_err(wrap)?.set
            }
        };
        let maj = majority.unwrap_or(0);
        log.push(StageLog {
            stage: String::from(stage.name()),
            input_size,
            output_size: next.len(),
            majority_count: next.count(maj),
            minority_count: next.len() - next.count(maj),
            passes,
            flags,
        });
        current = next;
    }
    Ok(PipelineOutcome { set: current, log })
}
