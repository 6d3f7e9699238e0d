//! Exact k-nearest-neighbor queries.
//!
//! Brute force over all rows: every query computes the distance to every
//! candidate and orders by `(distance, row id)`, so results are fully
//! deterministic, including ties.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Metric {
    Euclidean,
    /// Number of unequal coordinates (categorical codes).
    Hamming,
    /// Heterogeneous Euclidean-overlap: overlap for categorical columns,
    /// range-normalized absolute difference (clamped to 1) for numeric ones.
    Heom { columns: Vec<ColumnKind>, ranges: Vec<f64> },
}

impl Metric {
    /// HEOM with ranges taken from the data (`max − min` per numeric
    /// column; constant columns get range 1).
    pub fn heom_from_data(columns: Vec<ColumnKind>, data: &[f64]) -> Self {
        let w = columns.len();
        let mut ranges = alloc::vec![1.0; w];
        if w > 0 && !data.is_empty() {
            for (j, kind) in columns.iter().enumerate() {
                if *kind == ColumnKind::Numeric {
                    let (lo, hi) = data
                        .iter()
                        .skip(j)
                        .step_by(w)
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                    if hi > lo {
                        ranges[j] = hi - lo;
                    }
                }
            }
        }
        Metric::Heom { columns, ranges }
    }

    pub fn validate(&self) -> Result<()> {
        if let Metric::Heom { columns, ranges } = self {
            if columns.len() != ranges.len() {
                return Err(Error::DimensionMismatch { expected: columns.len(), found: ranges.len() });
            }
            if ranges.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
                return Err(Error::config("metric.ranges", "HEOM ranges must be positive"));
            }
        }
        Ok(())
    }

    fn width(&self) -> Option<usize> {
        match self {
            Metric::Heom { columns, .. } => Some(columns.len()),
            _ => None,
        }
    }

    /// Distance without width checks; callers guarantee `a.len() == b.len()`.
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => {
                let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                libm::sqrt(s)
            }
            Metric::Hamming => a.iter().zip(b).filter(|(x, y)| x != y).count() as f64,
            Metric::Heom { columns, ranges } => {
                let mut s = 0.0;
                for j in 0..a.len() {
                    let d = match columns[j] {
                        ColumnKind::Categorical => (a[j] != b[j]) as u8 as f64,
                        ColumnKind::Numeric => (libm::fabs(a[j] - b[j]) / ranges[j]).min(1.0),
                    };
                    s += d * d;
                }
                libm::sqrt(s)
            }
        }
    }
}

pub fn distance(a: &[f64], b: &[f64], metric: &Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    if let Some(w) = metric.width() {
        if w != a.len() {
            return Err(Error::DimensionMismatch { expected: w, found: a.len() });
        }
    }
    Ok(metric.eval(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub row: usize,
    pub distance: f64,
}

fn by_distance_then_row(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.distance.total_cmp(&b.distance).then(a.row.cmp(&b.row))
}

/// Immutable view of an `n × width` row-major matrix under a metric.
#[derive(Debug, Clone, Copy)]
pub struct NeighborIndex<'a> {
    data: &'a [f64],
    width: usize,
    metric: &'a Metric,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(data: &'a [f64], width: usize, metric: &'a Metric) -> Result<Self> {
        metric.validate()?;
        if width == 0 || !data.len().is_multiple_of(width) {
            return Err(Error::input("matrix length is not a multiple of its width"));
        }
        if let Some(w) = metric.width() {
            if w != width {
                return Err(Error::DimensionMismatch { expected: w, found: width });
            }
        }
        Ok(NeighborIndex { data, width, metric })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    fn select(&self, mut all: Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, by_distance_then_row);
            all.truncate(k);
        }
        all.sort_unstable_by(by_distance_then_row);
        all
    }

    /// The `k` nearest rows to row `query`, excluding the row itself.
    pub fn k_nearest(&self, query: usize, k: usize) -> Result<Vec<Neighbor>> {
        let n = self.len();
        if query >= n {
            return Err(Error::input("query row is not in the index"));
        }
        if k == 0 || k > n - 1 {
            return Err(Error::KTooLarge { k, available: n - 1 });
        }
        let q = self.row(query);
        let all = (0..n)
            .filter(|&i| i != query)
            .map(|i| Neighbor { row: i, distance: self.metric.eval(q, self.row(i)) })
            .collect();
        Ok(self.select(all, k))
    }

    /// The `k` nearest rows to an external point (no exclusion).
    pub fn k_nearest_point(&self, point: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        if point.len() != self.width {
            return Err(Error::DimensionMismatch { expected: self.width, found: point.len() });
        }
        let n = self.len();
        if k == 0 || k > n {
            return Err(Error::KTooLarge { k, available: n });
        }
        let all = (0..n).map(|i| Neighbor { row: i, distance: self.metric.eval(point, self.row(i)) }).collect();
        Ok(self.select(all, k))
    }
}
