//! Candidate-threshold scanning shared by CART and boosting.

use alloc::vec::Vec;

use super::encode::Matrix;

/// Column-major copy of the training matrix.
pub(crate) struct Columns {
    cols: Vec<Vec<f64>>,
    /// Every value is 0 or 1 (one-hot indicators): a single threshold.
    binary: Vec<bool>,
}

impl Columns {
    pub fn new(m: &Matrix) -> Self {
        let cols = m.columns();
        let binary = cols.iter().map(|c| c.iter().all(|&v| v == 0.0 || v == 1.0)).collect();
        Columns { cols, binary }
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn partition(&self, feature: usize, threshold: f64, rows: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let col = &self.cols[feature];
        rows.iter().partition(|&&r| col[r] <= threshold)
    }
}

/// Additive per-row statistic.
pub(crate) trait Stat: Copy + Default {
    fn add(&mut self, other: Self);
    fn sub(self, other: Self) -> Self;
    fn count(&self) -> usize;
}

pub(crate) fn total<S: Stat>(rows: &[usize], stat: &impl Fn(usize) -> S) -> S {
    let mut acc = S::default();
    for &r in rows {
        acc.add(stat(r));
    }
    acc
}

/// Calls `visit(threshold, left)` for each midpoint between consecutive
/// distinct values of `feature` over `rows`, in increasing threshold
/// order; `left` accumulates the rows at or below the threshold.
pub(crate) fn scan_exact<S: Stat>(
    cols: &Columns,
    feature: usize,
    rows: &[usize],
    stat: &impl Fn(usize) -> S,
    node_total: S,
    buf: &mut Vec<(f64, usize)>,
    mut visit: impl FnMut(f64, S),
) {
    let col = &cols.cols[feature];
    if cols.binary[feature] {
        let mut left = S::default();
        for &r in rows {
            if col[r] == 0.0 {
                left.add(stat(r));
            }
        }
        if left.count() > 0 && left.count() < node_total.count() {
            visit(0.5, left);
        }
        return;
    }
    buf.clear();
    buf.extend(rows.iter().map(|&r| (col[r], r)));
    buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut left = S::default();
    for i in 0..buf.len().saturating_sub(1) {
        left.add(stat(buf[i].1));
        if buf[i].0 < buf[i + 1].0 {
            visit(0.5 * (buf[i].0 + buf[i + 1].0), left);
        }
    }
}

/// One threshold drawn uniformly in `[min, max)` of `feature` over `rows`
/// (`u` in `[0, 1)`); `None` when the feature is constant there.
pub(crate) fn scan_random<S: Stat>(
    cols: &Columns,
    feature: usize,
    rows: &[usize],
    stat: &impl Fn(usize) -> S,
    u: f64,
) -> Option<(f64, S)> {
    let col = &cols.cols[feature];
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(col[r]), hi.max(col[r])));
    if !(hi > lo) {
        return None;
    }
    let mut t = lo + u * (hi - lo);
    if t >= hi {
        t = lo;
    }
    let mut left = S::default();
    for &r in rows {
        if col[r] <= t {
            left.add(stat(r));
        }
    }
    Some((t, left))
}

/// Relative tolerance under which two split scores count as tied, so
/// the earlier (lower feature, lower threshold) candidate is kept.
pub(crate) const TIE_TOL: f64 = 1e-12;

pub(crate) fn improves(score: f64, best: f64) -> bool {
    if best == f64::NEG_INFINITY {
        return score > best;
    }
    score > best + TIE_TOL * (1.0 + libm::fabs(best))
}

/// Best-candidate tracker with deterministic tie-breaking on
/// `(feature, threshold)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Best {
    pub score: f64,
    pub feature: usize,
    pub threshold: f64,
}

impl Best {
    pub fn offer(slot: &mut Option<Best>, cand: Best) {
        let replace = match slot {
            None => true,
            Some(b) => {
                improves(cand.score, b.score)
                    || (!improves(b.score, cand.score)
                        && (cand.feature, cand.threshold) < (b.feature, b.threshold))
            }
        };
        if replace {
            *slot = Some(cand);
        }
    }
}
