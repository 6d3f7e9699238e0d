//! Feature screening: one-way ANOVA of the binary label across the
//! categories of each feature, and Cramér's V between feature pairs.

mod special;

pub use special::{beta_reg, beta_reg_with_complement, f_survival, ln_beta, ln_gamma};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    /// `+∞` when the within-group sum of squares vanishes while the
    /// between-group one does not.
    #[serde(with = "finite_or_inf")]
    pub f_stat: f64,
    pub df_between: u32,
    pub df_within: u32,
    pub p_value: f64,
}

impl AnovaResult {
    pub fn is_infinite(&self) -> bool {
        self.f_stat == f64::INFINITY
    }
}

mod finite_or_inf {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr<'a> {
        Num(f64),
        Tag(&'a str),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() { Repr::Num(*v) } else { Repr::Tag("inf") }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Num(v) => v,
            Repr::Tag(_) => f64::INFINITY,
        })
    }
}

/// Sufficient statistics of one group of responses.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GroupMoments {
    pub n: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl GroupMoments {
    pub fn of(values: &[f64]) -> Self {
        values.iter().fold(GroupMoments::default(), |m, &v| GroupMoments {
            n: m.n + 1.0,
            sum: m.sum + v,
            sum_sq: m.sum_sq + v * v,
        })
    }
}

/// One-way ANOVA from per-group moments. Empty groups are ignored.
pub fn anova_from_moments(groups: &[GroupMoments]) -> Result<AnovaResult> {
    let groups: Vec<&GroupMoments> = groups.iter().filter(|g| g.n > 0.0).collect();
    let g = groups.len();
    if g < 2 {
        return Err(Error::Degenerate(String::from("one group")));
    }
    let n: f64 = groups.iter().map(|m| m.n).sum();
    if n <= g as f64 {
        return Err(Error::input(format!("ANOVA needs more rows ({n}) than groups ({g})")));
    }
    let grand = groups.iter().map(|m| m.sum).sum::<f64>() / n;
    let ssb: f64 = groups
        .iter()
        .map(|m| {
            let d = m.sum / m.n - grand;
            m.n * d * d
        })
        .sum();
    let ssw: f64 = groups.iter().map(|m| (m.sum_sq - m.sum * m.sum / m.n).max(0.0)).sum();
    let df_between = (g - 1) as u32;
    let df_within = (n as usize - g) as u32;
    let f_stat = if ssb <= 0.0 {
        0.0
    } else if ssw <= 0.0 {
        f64::INFINITY
    } else {
        (ssb / df_between as f64) / (ssw / df_within as f64)
    };
    let p_value = f_survival(f_stat, df_between, df_within)?;
    Ok(AnovaResult { f_stat, df_between, df_within, p_value })
}

/// One-way ANOVA over explicit groups of numeric responses.
pub fn one_way_anova(groups: &[&[f64]]) -> Result<AnovaResult> {
    let moments: Vec<GroupMoments> = groups.iter().map(|g| GroupMoments::of(g)).collect();
    anova_from_moments(&moments)
}

/// ANOVA of the 0/1 label with the categories of `feature` as groups.
///
/// Only per-(category, label) counts enter, so the result is invariant to
/// row order and category naming.
pub fn anova_f(dataset: &Dataset, feature: &str) -> Result<AnovaResult> {
    let j = dataset.feature_index(feature)?;
    let mut totals = vec![0u64; dataset.vocab[j].len()];
    let mut positives = vec![0u64; dataset.vocab[j].len()];
    for i in 0..dataset.n_rows() {
        let c = dataset.row(i)[j] as usize;
        totals[c] += 1;
        positives[c] += dataset.labels[i] as u64;
    }
    let moments: Vec<GroupMoments> = totals
        .iter()
        .zip(&positives)
        .map(|(&n, &p)| GroupMoments { n: n as f64, sum: p as f64, sum_sq: p as f64 })
        .collect();
    anova_from_moments(&moments).map_err(|e| match e {
        Error::Degenerate(_) => Error::Degenerate(format!("feature \"{feature}\" has one group")),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Keep,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningEntry {
    pub feature: String,
    /// Absent for degenerate features.
    pub anova: Option<AnovaResult>,
    pub decision: Decision,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub alpha: f64,
    pub entries: Vec<ScreeningEntry>,
}

impl ScreeningReport {
    pub fn kept(&self) -> Vec<String> {
        self.entries.iter().filter(|e| e.decision == Decision::Keep).map(|e| e.feature.clone()).collect()
    }
}

/// Keep features whose ANOVA p-value is at most `alpha`.
pub fn screen_by_anova(dataset: &Dataset, alpha: f64) -> Result<ScreeningReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config("screening.alpha", "must lie in (0, 1)"));
    }
    if dataset.n_rows() == 0 {
        return Err(Error::NoRows);
    }
    let mut entries = Vec::with_capacity(dataset.n_features());
    for name in &dataset.feature_names {
        let entry = match anova_f(dataset, name) {
            Ok(a) => ScreeningEntry {
                feature: name.clone(),
                anova: Some(a),
                decision: if a.p_value > alpha { Decision::Drop } else { Decision::Keep },
                degenerate: false,
            },
            Err(Error::Degenerate(_)) => {
                ScreeningEntry { feature: name.clone(), anova: None, decision: Decision::Drop, degenerate: true }
            }
            Err(e) => return Err(e),
        };
        entries.push(entry);
    }
    Ok(ScreeningReport { alpha, entries })
}

/// Pearson chi-square statistic of a contingency table. Rows and columns
/// with a zero margin are removed first; returns `(χ², rows, cols, n)`.
pub fn chi_square(table: &[Vec<u64>]) -> (f64, usize, usize, u64) {
    let cols = table.first().map_or(0, |r| r.len());
    let row_tot: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_tot: Vec<u64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let live_rows: Vec<usize> = (0..table.len()).filter(|&i| row_tot[i] > 0).collect();
    let live_cols: Vec<usize> = (0..cols).filter(|&j| col_tot[j] > 0).collect();
    let n: u64 = row_tot.iter().sum();
    let mut chi2 = 0.0;
    for &i in &live_rows {
        for &j in &live_cols {
            let expected = row_tot[i] as f64 * col_tot[j] as f64 / n as f64;
            let d = table[i][j] as f64 - expected;
            chi2 += d * d / expected;
        }
    }
    (chi2, live_rows.len(), live_cols.len(), n)
}

/// Cramér's V of a contingency table (no bias correction).
pub fn cramers_v_table(table: &[Vec<u64>]) -> Result<f64> {
    let (chi2, r, c, n) = chi_square(table);
    if r < 2 || c < 2 {
        return Err(Error::Degenerate(String::from("degenerate association: one observed category")));
    }
    let v = libm::sqrt(chi2 / (n as f64 * (r.min(c) - 1) as f64));
    Ok(v.clamp(0.0, 1.0))
}

pub fn contingency(dataset: &Dataset, a: usize, b: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; dataset.vocab[b].len()]; dataset.vocab[a].len()];
    for i in 0..dataset.n_rows() {
        let r = dataset.row(i);
        t[r[a] as usize][r[b] as usize] += 1;
    }
    t
}

pub fn cramers_v(dataset: &Dataset, feature_a: &str, feature_b: &str) -> Result<f64> {
    let a = dataset.feature_index(feature_a)?;
    let b = dataset.feature_index(feature_b)?;
    if dataset.n_rows() == 0 {
        return Err(Error::NoRows);
    }
    for (idx, name) in [(a, feature_a), (b, feature_b)] {
        let mut seen = vec![false; dataset.vocab[idx].len()];
        (0..dataset.n_rows()).for_each(|i| seen[dataset.row(i)[idx] as usize] = true);
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(Error::Degenerate(format!("degenerate association: \"{name}\" has one observed category")));
        }
    }
    cramers_v_table(&contingency(dataset, a, b))
}

/// Symmetric Cramér's V matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationMatrix {
    pub features: Vec<String>,
    /// Row-major `p × p`.
    pub values: Vec<f64>,
}

impl AssociationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.features.len() + j]
    }
}

pub fn association_matrix(dataset: &Dataset) -> Result<AssociationMatrix> {
    let p = dataset.n_features();
    if p < 2 {
        return Err(Error::input("association matrix needs at least 2 features"));
    }
    let mut values = vec![0.0; p * p];
    for i in 0..p {
        values[i * p + i] = 1.0;
        for j in i + 1..p {
            let v = cramers_v(dataset, &dataset.feature_names[i], &dataset.feature_names[j])?;
            values[i * p + j] = v;
            values[j * p + i] = v;
        }
    }
    Ok(AssociationMatrix { features: dataset.feature_names.clone(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn dataset(columns: &[&[u32]], labels: &[u8]) -> Dataset {
        let p = columns.len();
        let n = labels.len();
        let names = (0..p).map(|j| format!("f{j}")).collect();
        let vocab = columns
            .iter()
            .map(|c| (0..=*c.iter().max().unwrap()).map(|v| v.to_string()).collect())
            .collect();
        let mut codes = Vec::new();
        for i in 0..n {
            for c in columns {
                codes.push(c[i]);
            }
        }
        Dataset::new(names, vocab, codes, labels.to_vec()).unwrap()
    }

    #[test]
    fn anova_hand_example() {
        let r = one_way_anova(&[&[0.0, 1.0], &[1.0, 2.0]]).unwrap();
        assert!(libm::fabs(r.f_stat - 2.0) < 1e-12);
        assert_eq!((r.df_between, r.df_within), (1, 2));
    }

    #[test]
    fn anova_flat_and_separated() {
        let r = one_way_anova(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert_eq!((r.f_stat, r.p_value), (0.0, 1.0));
        let r = one_way_anova(&[&[0.0, 0.0], &[1.0, 1.0]]).unwrap();
        assert!(r.is_infinite());
        assert_eq!(r.p_value, 0.0);
        assert!(matches!(one_way_anova(&[&[1.0, 2.0]]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn screening_decisions() {
        let labels = [0, 0, 1, 1, 0, 0, 1, 1];
        let same = [0, 0, 1, 1, 0, 0, 1, 1];
        let indep = [0, 1, 0, 1, 0, 1, 0, 1];
        let constant = [0; 8];
        let d = dataset(&[&same, &indep, &constant], &labels);
        let rep = screen_by_anova(&d, 0.05).unwrap();
        assert_eq!(rep.entries[0].decision, Decision::Keep);
        assert_eq!(rep.entries[0].anova.unwrap().p_value, 0.0);
        let a = rep.entries[1].anova.unwrap();
        assert_eq!((a.f_stat, a.p_value, rep.entries[1].decision), (0.0, 1.0, Decision::Drop));
        assert!(rep.entries[2].degenerate);
        assert_eq!(rep.entries[2].decision, Decision::Drop);
        assert_eq!(rep.kept(), alloc::vec!["f0".to_string()]);
    }

    #[test]
    fn cramers_v_examples() {
        let v = cramers_v_table(&[alloc::vec![8, 2], alloc::vec![2, 8]]).unwrap();
        assert!(libm::fabs(v - 0.6) < 1e-12);
        let v = cramers_v_table(&[alloc::vec![25, 25], alloc::vec![25, 25]]).unwrap();
        assert_eq!(v, 0.0);
        // zero margins are removed before counting categories
        let v = cramers_v_table(&[alloc::vec![8, 0, 2], alloc::vec![2, 0, 8], alloc::vec![0, 0, 0]]).unwrap();
        assert!(libm::fabs(v - 0.6) < 1e-12);
        assert!(cramers_v_table(&[alloc::vec![3, 4], alloc::vec![0, 0]]).is_err());
    }

    #[test]
    fn association_matrix_shape() {
        let labels = [0, 1, 0, 1, 0, 1, 0, 1];
        let a = [0, 0, 1, 1, 0, 0, 1, 1];
        let b = [0, 1, 0, 1, 0, 1, 0, 1];
        let d = dataset(&[&a, &b, &a], &labels);
        let m = association_matrix(&d).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert!(libm::fabs(m.get(0, 2) - 1.0) < 1e-12);
        for i in 0..3 {
            assert_eq!(m.get(i, i), 1.0);
            for j in 0..3 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        let c = [0u32; 8];
        let d = dataset(&[&a, &c], &labels);
        let err = association_matrix(&d).unwrap_err();
        assert!(format!("{err}").contains("f1"));
    }
}
