use proptest::prelude::*;
use survbal_core::neighbors::{ColumnKind, Metric};
use survbal_core::rng;
use survbal_core::sampling::{enn, majority_label, run_pipeline, smote, Origin, SampleSet, SamplerSpec, SamplerStage, SmoteMode};

fn numeric_set() -> impl Strategy<Value = SampleSet> {
    (8usize..80, any::<u64>()).prop_map(|(n, seed)| {
        let mut s = rng::stream(seed, &[]);
        let labels: Vec<u8> = (0..n).map(|i| (i % 4 == 0) as u8).collect();
        let values = (0..2 * n).map(|_| rng::uniform(&mut s) * 10.0).collect();
        SampleSet::numeric(2, values, labels).unwrap()
    })
}

fn categorical_set() -> impl Strategy<Value = SampleSet> {
    prop::collection::vec((0u8..3, 0u8..4, 0u8..2), 12..60).prop_map(|rows| {
        let values = rows.iter().flat_map(|r| [r.0 as f64, r.1 as f64]).collect();
        let mut labels: Vec<u8> = rows.iter().map(|r| r.2).collect();
        labels[0] = 0;
        labels[1] = 1;
        labels[2] = 1;
        labels[3] = 1;
        SampleSet::new(vec![ColumnKind::Categorical; 2], values, labels).unwrap()
    })
}

proptest! {
    #[test]
    fn smote_balances_exactly(set in numeric_set(), seed in any::<u64>()) {
        let maj = set.count(0);
        let out = smote(&set, 1, 1.0, SmoteMode::Continuous, &Metric::Euclidean, None, &mut rng::stream(seed, &[])).unwrap();
        prop_assert_eq!(out.set.count(1), maj);
        prop_assert_eq!(out.set.count(0), maj);
        prop_assert_eq!(&out.set.values[..set.values.len()], &set.values[..]);
        // Synthetic points stay inside the minority bounding box.
        let minority: Vec<&[f64]> = (0..set.len()).filter(|&i| set.labels[i] == 1).map(|i| set.row(i)).collect();
        for i in set.len()..out.set.len() {
            for j in 0..2 {
                let lo = minority.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
                let hi = minority.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(out.set.row(i)[j] >= lo - 1e-12 && out.set.row(i)[j] <= hi + 1e-12);
            }
            prop_assert!(matches!(out.set.origin[i], Origin::Synthetic(s) if set.labels[s] == 1));
        }
    }

    #[test]
    fn categorical_smote_emits_observed_codes(set in categorical_set(), seed in any::<u64>()) {
        let minority = 1 - majority_label(&set.labels).unwrap();
        let m = set.count(minority);
        prop_assume!(m >= 3 && m < set.len() - m);
        let out = smote(&set, 2, 1.0, SmoteMode::Categorical, &Metric::Hamming, None, &mut rng::stream(seed, &[])).unwrap();
        for i in set.len()..out.set.len() {
            for j in 0..2 {
                let v = out.set.row(i)[j];
                prop_assert!((0..set.len()).any(|r| set.labels[r] == minority && set.row(r)[j] == v));
            }
        }
    }

    #[test]
    fn enn_only_removes_majority(set in numeric_set(), k in 1usize..6) {
        let out = enn(&set, k, &Metric::Euclidean, None, false).unwrap();
        prop_assert_eq!(out.set.count(1), set.count(1));
        prop_assert_eq!(out.removed, set.len() - out.set.len());
        let mut seen = out.set.origin.iter().map(|o| o.source()).collect::<Vec<_>>();
        seen.dedup();
        prop_assert_eq!(seen.len(), out.set.len());
        for (i, o) in out.set.origin.iter().enumerate() {
            prop_assert_eq!(out.set.row(i), set.row(o.source()));
        }
    }

    #[test]
    fn pipelines_are_reproducible(set in numeric_set(), seed in any::<u64>()) {
        let spec = SamplerSpec {
            stages: vec![
                SamplerStage::Renn { k: 3, max_iter: 100, strict_unanimous: false },
                SamplerStage::Smote { k: 1, target_ratio: 1.0, mode: SmoteMode::Continuous },
            ],
            metric: Metric::Euclidean,
            seed,
        };
        let a = run_pipeline(&spec, &set).unwrap();
        prop_assert_eq!(&a, &run_pipeline(&spec, &set).unwrap());
        prop_assert_eq!(a.set.count(1), a.log[0].majority_count.max(a.log[0].minority_count));
        prop_assert_eq!(a.log.len(), 2);
    }
}

#[test]
fn smote_then_renn_is_also_allowed() {
    let mut s = rng::stream(5, &[]);
    let labels: Vec<u8> = (0..120).map(|i| (i % 6 == 0) as u8).collect();
    let values = (0..240).map(|i| rng::uniform(&mut s) + if labels[i / 2] == 1 { 0.7 } else { 0.0 }).collect();
    let set = SampleSet::numeric(2, values, labels).unwrap();
    let spec = SamplerSpec {
        stages: vec![SamplerStage::smote(SmoteMode::Continuous), SamplerStage::renn()],
        metric: Metric::Euclidean,
        seed: 1,
    };
    let out = run_pipeline(&spec, &set).unwrap();
    assert_eq!(out.log[0].output_size, 200);
    assert!(out.set.count(0) <= 100);
    assert_eq!(out.set.count(1), 100);
}
