use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Disjoint test folds covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Test row ids of each fold, ascending.
    pub folds: Vec<Vec<usize>>,
    /// Labels with fewer than `k` rows (some folds lack them).
    pub sparse_classes: Vec<u8>,
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.folds.iter().map(|f| f.len()).sum()
    }

    /// Training rows of fold `f` (the complement of its test rows), ascending.
    pub fn train_rows(&self, f: usize) -> Vec<usize> {
        let mut in_test = alloc::vec![false; self.n_rows()];
        for &i in &self.folds[f] {
            in_test[i] = true;
        }
        (0..in_test.len()).filter(|&i| !in_test[i]).collect()
    }
}

/// Stratified k-fold assignment: the rows of each class are shuffled and
/// dealt round-robin, the deal continuing across classes, so per-fold
/// class counts are within one of exact proportionality.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::config("evaluation.k", "must be at least 2"));
    }
    if k > labels.len() {
        return Err(Error::config("evaluation.k", alloc::format!("k = {k} exceeds the {} rows", labels.len())));
    }
    let mut stream = rng::stream(seed, &[]);
    let mut folds = alloc::vec![Vec::new(); k];
    let mut sparse_classes = Vec::new();
    let mut next = 0;
    for class in [0u8, 1u8] {
        let mut ids: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if ids.is_empty() {
            continue;
        }
        if ids.len() < k {
            sparse_classes.push(class);
        }
        rng::shuffle(&mut stream, &mut ids);
        for id in ids {
            folds[next].push(id);
            next = (next + 1) % k;
        }
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    Ok(FoldPlan { k, seed, folds, sparse_classes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn even_proportions() {
        let mut labels = vec![1u8; 10];
        labels.extend(vec![0u8; 90]);
        let plan = stratified_folds(&labels, 5, 3).unwrap();
        for f in &plan.folds {
            assert_eq!(f.iter().filter(|&&i| labels[i] == 1).count(), 2);
            assert_eq!(f.iter().filter(|&&i| labels[i] == 0).count(), 18);
        }
    }

    #[test]
    fn lone_positive_and_determinism() {
        let mut labels = vec![0u8; 10];
        labels[4] = 1;
        let plan = stratified_folds(&labels, 5, 1).unwrap();
        assert_eq!(plan.folds.iter().filter(|f| f.contains(&4)).count(), 1);
        assert_eq!(plan.sparse_classes, vec![1]);
        assert_eq!(plan, stratified_folds(&labels, 5, 1).unwrap());
        assert!(stratified_folds(&labels, 11, 1).is_err());
        assert!(stratified_folds(&labels, 1, 1).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_balance(labels in prop::collection::vec(0u8..2, 2..300), k in 2usize..8, seed in any::<u64>()) {
            prop_assume!(k <= labels.len());
            let plan = stratified_folds(&labels, k, seed).unwrap();
            let mut all: Vec<usize> = plan.folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for class in [0u8, 1] {
                let total = labels.iter().filter(|&&l| l == class).count() as f64;
                for f in &plan.folds {
                    let c = f.iter().filter(|&&i| labels[i] == class).count() as f64;
                    prop_assert!((c - total / k as f64).abs() <= 1.0);
                }
            }
        }
    }
}
