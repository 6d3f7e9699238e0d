use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts; label 1 (Not-Survived) is positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&mut self, o: &ConfusionMatrix) {
        self.tp += o.tp;
        self.tn += o.tn;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), found: y_pred.len() });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            _ => return Err(Error::input("labels must be 0 or 1")),
        }
    }
    Ok(cm)
}

/// Accuracy, sensitivity, specificity and F1; `None` marks a metric whose
/// denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
}

impl Metrics {
    pub fn values(&self) -> [Option<f64>; 4] {
        [self.accuracy, self.sensitivity, self.specificity, self.f1]
    }

    /// Per-metric arithmetic mean over the entries where it is defined.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Metrics>) -> Metrics {
        let mut sums = [0.0; 4];
        let mut counts = [0usize; 4];
        for m in items {
            for (i, v) in m.values().iter().enumerate() {
                if let Some(v) = v {
                    sums[i] += v;
                    counts[i] += 1;
                }
            }
        }
        let avg = |i: usize| (counts[i] > 0).then(|| sums[i] / counts[i] as f64);
        Metrics { accuracy: avg(0), sensitivity: avg(1), specificity: avg(2), f1: avg(3) }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Metrics {
    let ConfusionMatrix { tp, tn, fp, fn_ } = *cm;
    let f1 = if tp > 0 {
        Some(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
    } else if fp + fn_ > 0 {
        Some(0.0)
    } else {
        None
    };
    Metrics {
        accuracy: ratio(tn + tp, tn + fp + tp + fn_),
        sensitivity: ratio(tp, tp + fn_),
        specificity: ratio(tn, tn + fp),
        f1,
    }
}

/// F1 in harmonic form `1 / (1 + FN/2TP + FP/2TP)`; defined for `tp > 0`.
pub fn f1_harmonic(cm: &ConfusionMatrix) -> Option<f64> {
    (cm.tp > 0).then(|| {
        let two_tp = 2.0 * cm.tp as f64;
        1.0 / (1.0 + cm.fn_ as f64 / two_tp + cm.fp as f64 / two_tp)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-6)
    }

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, tn: 1, fp: 1, fn_: 1 });
        let cm = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
        assert!(confusion(&[1], &[1, 0]).is_err());
        let empty = confusion(&[], &[]).unwrap();
        assert_eq!(empty, ConfusionMatrix::default());
        assert_eq!(compute_metrics(&empty), Metrics::default());
    }

    #[test]
    fn metric_examples() {
        let m = compute_metrics(&ConfusionMatrix { tp: 1, tn: 1, fp: 1, fn_: 1 });
        assert_eq!(m.values(), [Some(0.5); 4]);
        let m = compute_metrics(&ConfusionMatrix { tp: 50, tn: 100, fp: 30, fn_: 20 });
        assert!(close(m.accuracy, 0.75));
        assert!(close(m.sensitivity, 0.714286));
        assert!(close(m.specificity, 0.769231));
        assert!(close(m.f1, 0.666667));
        let m = compute_metrics(&ConfusionMatrix { tp: 0, tn: 5, fp: 0, fn_: 5 });
        assert_eq!(m.values(), [Some(0.5), Some(0.0), Some(1.0), Some(0.0)]);
        let m = compute_metrics(&ConfusionMatrix { tp: 0, tn: 5, fp: 0, fn_: 0 });
        assert_eq!((m.sensitivity, m.f1), (None, None));
    }

    #[test]
    fn mean_skips_undefined() {
        let a = Metrics { accuracy: Some(0.5), sensitivity: None, specificity: Some(1.0), f1: Some(0.2) };
        let b = Metrics { accuracy: Some(1.0), sensitivity: Some(0.4), specificity: Some(0.0), f1: Some(0.4) };
        let m = Metrics::mean([&a, &b]);
        assert_eq!(m.accuracy, Some(0.75));
        assert_eq!(m.sensitivity, Some(0.4));
        assert!((m.f1.unwrap() - 0.3).abs() < 1e-15);
    }
}
