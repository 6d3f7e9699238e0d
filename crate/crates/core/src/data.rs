//! Categorical tables, preprocessing policies and survival-horizon labels.
//!
//! Rows flow as text through [`RawTable`] (ingestion, missing-value
//! dropping, range filters, rare-category merging) and are then encoded
//! into a [`Dataset`] of per-feature category codes plus a binary label
//! (1 = Not-Survived, the positive/minority class).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the category that absorbs rare categories.
pub const OTHERS: &str = "Others";

pub fn default_missing_tokens() -> Vec<String> {
    ["Unknown", "", "NA"].iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    /// Optional closed vocabulary; when present it fixes the code order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>) -> Self {
        FeatureSpec { name: name.into(), categories: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<FeatureSpec>,
    /// Column holding survival months.
    pub label_source: String,
    pub missing_tokens: Vec<String>,
}

impl Schema {
    pub fn new(features: Vec<FeatureSpec>, label_source: impl Into<String>) -> Result<Self> {
        let schema = Schema {
            features,
            label_source: label_source.into(),
            missing_tokens: default_missing_tokens(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, f) in self.features.iter().enumerate() {
            if self.features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::config("schema.features", alloc::format!("duplicate feature \"{}\"", f.name)));
            }
            if f.name == self.label_source {
                return Err(Error::config(
                    "schema.label_source",
                    alloc::format!("\"{}\" is also listed as a feature", f.name),
                ));
            }
        }
        Ok(())
    }

    /// Column order of tables ingested under this schema: features, then
    /// the survival-months column.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.features.iter().map(|f| f.name.clone()).collect();
        cols.push(self.label_source.clone());
        cols
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }
}

/// Row-major text table with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(Error::Parse {
                    row: i,
                    message: alloc::format!("expected {} cells, found {}", columns.len(), r.len()),
                });
            }
        }
        Ok(RawTable { columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

/// Keep rows with no cell equal to a missing token. Returns the filtered
/// table and the number of dropped rows.
pub fn drop_incomplete(table: &RawTable, missing_tokens: &[String]) -> (RawTable, usize) {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .filter(|r| !r.iter().any(|c| missing_tokens.iter().any(|t| t == c)))
        .cloned()
        .collect();
    let dropped = table.rows.len() - rows.len();
    (RawTable { columns: table.columns.clone(), rows }, dropped)
}

/// Keep rows whose `column` parses as a number in `[lo, hi]`.
pub fn filter_range(table: &RawTable, column: &str, lo: f64, hi: f64) -> Result<(RawTable, usize)> {
    if lo > hi {
        return Err(Error::config("range_filters", alloc::format!("lo {lo} > hi {hi} for \"{column}\"")));
    }
    let j = table.column_index(column)?;
    let mut rows = Vec::with_capacity(table.rows.len());
    for (i, r) in table.rows.iter().enumerate() {
        let v: f64 = r[j].trim().parse().map_err(|_| Error::Parse {
            row: i,
            message: alloc::format!("\"{}\" in column \"{column}\" is not numeric", r[j]),
        })?;
        if v >= lo && v <= hi {
            rows.push(r.clone());
        }
    }
    let dropped = table.rows.len() - rows.len();
    Ok((RawTable { columns: table.columns.clone(), rows }, dropped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMerge {
    pub feature: String,
    /// Original category name to retained name (itself or [`OTHERS`]).
    pub mapping: BTreeMap<String, String>,
    /// Post-merge category counts.
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeMap {
    pub threshold: f64,
    pub features: Vec<FeatureMerge>,
}

/// Rename every category of each listed feature whose share is strictly
/// below `threshold` to [`OTHERS`]. Shares are taken from the input table
/// in one pass, so a merge never triggers further merges.
pub fn merge_rare_categories(
    table: &RawTable,
    features: &[String],
    threshold: f64,
) -> Result<(RawTable, MergeMap)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::config("preprocess.merge_threshold", "must lie in (0, 1)"));
    }
    if table.is_empty() {
        return Err(Error::NoRows);
    }
    let n = table.len() as f64;
    let mut out = table.clone();
    let mut merges = Vec::with_capacity(features.len());
    for name in features {
        let j = table.column_index(name)?;
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &table.rows {
            *counts.entry(r[j].as_str()).or_default() += 1;
        }
        let mapping: BTreeMap<String, String> = counts
            .iter()
            .map(|(&c, &k)| {
                let target = if (k as f64) / n < threshold { OTHERS } else { c };
                (c.to_string(), target.to_string())
            })
            .collect();
        let mut post: BTreeMap<String, usize> = BTreeMap::new();
        for r in out.rows.iter_mut() {
            let target = &mapping[&r[j]];
            if *target != r[j] {
                r[j] = target.clone();
            }
            *post.entry(r[j].clone()).or_default() += 1;
        }
        merges.push(FeatureMerge { feature: name.clone(), mapping, counts: post });
    }
    Ok((out, MergeMap { threshold, features: merges }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonSpec {
    years: u32,
}

impl HorizonSpec {
    pub fn new(years: u32) -> Result<Self> {
        match years {
            1 | 3 | 5 => Ok(HorizonSpec { years }),
            _ => Err(Error::config("preprocess.horizon_years", "must be 1, 3 or 5")),
        }
    }

    pub fn years(&self) -> u32 {
        self.years
    }

    pub fn cutoff_months(&self) -> u32 {
        12 * self.years
    }

    /// Not-Survived (1) iff `months < cutoff`, or `months <= cutoff` when
    /// the boundary month is counted as a death within the horizon.
    pub fn label(&self, months: u32, cutoff_inclusive: bool) -> u8 {
        let cutoff = self.cutoff_months();
        let dead = if cutoff_inclusive { months <= cutoff } else { months < cutoff };
        dead as u8
    }
}

/// Categorical feature matrix with per-feature vocabularies and binary
/// labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub vocab: Vec<Vec<String>>,
    /// Row-major `n × p` category codes.
    pub codes: Vec<u32>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, vocab: Vec<Vec<String>>, codes: Vec<u32>, labels: Vec<u8>) -> Result<Self> {
        let p = feature_names.len();
        if vocab.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: vocab.len() });
        }
        if codes.len() != p * labels.len() {
            return Err(Error::DimensionMismatch { expected: p * labels.len(), found: codes.len() });
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::input(alloc::format!("label {l} is not binary")));
        }
        for (i, row) in codes.chunks(p.max(1)).enumerate().take(labels.len()) {
            for (j, &c) in row.iter().enumerate() {
                if c as usize >= vocab[j].len() {
                    return Err(Error::Parse {
                        row: i,
                        message: alloc::format!("code {c} out of range for feature \"{}\"", feature_names[j]),
                    });
                }
            }
        }
        Ok(Dataset { feature_names, vocab, codes, labels })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let p = self.n_features();
        &self.codes[i * p..(i + 1) * p]
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Column `j` as codes.
    pub fn column(&self, j: usize) -> Vec<u32> {
        (0..self.n_rows()).map(|i| self.row(i)[j]).collect()
    }

    /// Decode back to a text table (features then a `label` column).
    pub fn decode(&self) -> RawTable {
        let mut columns = self.feature_names.clone();
        columns.push("label".to_string());
        let rows = (0..self.n_rows())
            .map(|i| {
                let mut r: Vec<String> =
                    self.row(i).iter().enumerate().map(|(j, &c)| self.vocab[j][c as usize].clone()).collect();
                r.push(self.labels[i].to_string());
                r
            })
            .collect();
        RawTable { columns, rows }
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        let mut codes = Vec::with_capacity(rows.len() * self.n_features());
        for &i in rows {
            codes.extend_from_slice(self.row(i));
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            vocab: self.vocab.clone(),
            codes,
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Keep only the named features, in the given order.
    pub fn project(&self, features: &[String]) -> Result<Dataset> {
        let idx: Vec<usize> = features.iter().map(|f| self.feature_index(f)).collect::<Result<_>>()?;
        let mut codes = Vec::with_capacity(self.n_rows() * idx.len());
        for i in 0..self.n_rows() {
            let r = self.row(i);
            codes.extend(idx.iter().map(|&j| r[j]));
        }
        Ok(Dataset {
            feature_names: features.to_vec(),
            vocab: idx.iter().map(|&j| self.vocab[j].clone()).collect(),
            codes,
            labels: self.labels.clone(),
        })
    }
}

/// Vocabulary builder: declared order when a closed vocabulary is given,
/// otherwise first appearance.
struct Encoder<'a> {
    declared: Option<&'a [String]>,
    vocab: Vec<String>,
    lookup: BTreeMap<String, u32>,
}

impl<'a> Encoder<'a> {
    fn new(declared: Option<&'a [String]>) -> Self {
        let mut enc = Encoder { declared, vocab: Vec::new(), lookup: BTreeMap::new() };
        if let Some(d) = declared {
            for c in d {
                enc.insert(c);
            }
        }
        enc
    }

    fn insert(&mut self, cell: &str) -> u32 {
        let code = self.vocab.len() as u32;
        self.vocab.push(cell.to_string());
        self.lookup.insert(cell.to_string(), code);
        code
    }

    fn encode(&mut self, cell: &str, row: usize, feature: &str) -> Result<u32> {
        if let Some(&c) = self.lookup.get(cell) {
            return Ok(c);
        }
        if self.declared.is_some() && cell != OTHERS {
            return Err(Error::Parse {
                row,
                message: alloc::format!("\"{cell}\" is not a declared category of \"{feature}\""),
            });
        }
        Ok(self.insert(cell))
    }
}

fn encode_features(table: &RawTable, features: &[FeatureSpec]) -> Result<(Vec<Vec<String>>, Vec<u32>)> {
    let idx: Vec<usize> = features.iter().map(|f| table.column_index(&f.name)).collect::<Result<_>>()?;
    let mut encoders: Vec<Encoder> = features.iter().map(|f| Encoder::new(f.categories.as_deref())).collect();
    let mut codes = Vec::with_capacity(table.len() * features.len());
    for (i, r) in table.rows.iter().enumerate() {
        for (k, &j) in idx.iter().enumerate() {
            codes.push(encoders[k].encode(&r[j], i, &features[k].name)?);
        }
    }
    Ok((encoders.into_iter().map(|e| e.vocab).collect(), codes))
}

/// Map survival months to the binary outcome at `horizon` and encode the
/// feature columns.
pub fn derive_survival_label(
    table: &RawTable,
    schema: &Schema,
    horizon: HorizonSpec,
    cutoff_inclusive: bool,
) -> Result<Dataset> {
    let m = table.column_index(&schema.label_source)?;
    let mut labels = Vec::with_capacity(table.len());
    for (i, r) in table.rows.iter().enumerate() {
        let months: u32 = r[m].trim().parse().map_err(|_| Error::Parse {
            row: i,
            message: alloc::format!("survival months \"{}\" is not a non-negative integer", r[m]),
        })?;
        labels.push(horizon.label(months, cutoff_inclusive));
    }
    let (vocab, codes) = encode_features(table, &schema.features)?;
    Dataset::new(schema.feature_names(), vocab, codes, labels)
}

/// Encode a table whose `label_column` already holds 0/1 outcomes.
pub fn encode_labeled(table: &RawTable, features: &[FeatureSpec], label_column: &str) -> Result<Dataset> {
    let m = table.column_index(label_column)?;
    let mut labels = Vec::with_capacity(table.len());
    for (i, r) in table.rows.iter().enumerate() {
        labels.push(match r[m].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse { row: i, message: alloc::format!("label \"{other}\" is not 0 or 1") })
            }
        });
    }
    let (vocab, codes) = encode_features(table, features)?;
    Dataset::new(features.iter().map(|f| f.name.clone()).collect(), vocab, codes, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub positive: usize,
    pub negative: usize,
    pub positive_fraction: f64,
    /// Set when there are no rows (the fraction is then 0 by convention).
    pub empty: bool,
}

pub fn label_histogram(labels: &[u8]) -> LabelHistogram {
    let positive = labels.iter().filter(|&&l| l == 1).count();
    let negative = labels.len() - positive;
    let empty = labels.is_empty();
    LabelHistogram {
        positive,
        negative,
        positive_fraction: if empty { 0.0 } else { positive as f64 / labels.len() as f64 },
        empty,
    }
}
