use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{LabelVector, Metrics};
use crate::error::{Error, Result};

/// Assigns each user to one of `k` folds.
///
/// Unlabeled users form one stratum and labeled users are stratified by their
/// label vector, which keeps both the labeled/unlabeled ratio and each class's
/// positive ratio balanced across folds. Within a stratum users are shuffled
/// and dealt round-robin; the dealing position carries over between strata so
/// fold sizes differ by at most one overall.
pub fn stratified_folds(labels: &[Option<LabelVector>], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    let labeled = labels.iter().filter(|y| y.is_some()).count();
    for (name, size) in [("labeled", labeled), ("unlabeled", labels.len() - labeled)] {
        if size > 0 && size < k {
            return Err(Error::StratumTooSmall {
                name: name.into(),
                size,
                folds: k,
            });
        }
    }
    let mut strata: BTreeMap<Option<LabelVector>, Vec<usize>> = BTreeMap::new();
    for (i, y) in labels.iter().enumerate() {
        strata.entry(*y).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    /// Folds in which the metric was defined.
    pub count: usize,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Spread> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Spread {
            mean,
            sd: var.sqrt(),
            count: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub folds: usize,
    pub accuracy: Spread,
    pub auc: Option<Spread>,
    pub micro_f1: Option<Spread>,
    pub macro_f1: Option<Spread>,
    pub class_accuracy: [Spread; 3],
}

/// Mean and population sd of each metric over folds.
pub fn summarize(per_fold: &[Metrics]) -> Result<MetricSummary> {
    if per_fold.is_empty() {
        return Err(Error::InvalidArgument("no folds to summarize".into()));
    }
    let collect = |f: &dyn Fn(&Metrics) -> Option<f64>| -> Vec<f64> { per_fold.iter().filter_map(f).collect() };
    let spread = |f: &dyn Fn(&Metrics) -> f64| Spread::of(&collect(&|m| Some(f(m)))).expect("non-empty");
    Ok(MetricSummary {
        folds: per_fold.len(),
        accuracy: spread(&|m| m.accuracy),
        auc: Spread::of(&collect(&|m| m.auc)),
        micro_f1: Spread::of(&collect(&|m| m.micro_f1)),
        macro_f1: Spread::of(&collect(&|m| m.macro_f1)),
        class_accuracy: [0, 1, 2].map(|k| spread(&|m| m.class_accuracy[k])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cohort(labeled: &[LabelVector], unlabeled: usize) -> Vec<Option<LabelVector>> {
        labeled.iter().map(|&y| Some(y)).chain(std::iter::repeat_n(None, unlabeled)).collect()
    }

    #[test]
    fn twenty_labeled_eighty_unlabeled_per_fold() {
        let mut labeled = Vec::new();
        for i in 0..100 {
            labeled.push(match i % 4 {
                0 => [1, -1, -1],
                1 => [-1, 1, -1],
                2 => [-1, -1, 1],
                _ => [-1, -1, -1],
            });
        }
        let labels = cohort(&labeled, 400);
        let folds = stratified_folds(&labels, 5, 3).unwrap();
        for f in 0..5 {
            let lab = (0..500).filter(|&i| folds[i] == f && labels[i].is_some()).count();
            let unl = (0..500).filter(|&i| folds[i] == f && labels[i].is_none()).count();
            assert_eq!((lab, unl), (20, 80));
        }
    }

    #[test]
    fn same_seed_same_folds() {
        let labels = cohort(&[[1, -1, -1]; 12], 30);
        assert_eq!(stratified_folds(&labels, 5, 9).unwrap(), stratified_folds(&labels, 5, 9).unwrap());
        assert_ne!(stratified_folds(&labels, 5, 9).unwrap(), stratified_folds(&labels, 5, 10).unwrap());
    }

    #[test]
    fn tiny_stratum_rejected() {
        let labels = cohort(&[[1, -1, -1]; 4], 30);
        assert!(matches!(
            stratified_folds(&labels, 5, 0),
            Err(Error::StratumTooSmall { size: 4, .. })
        ));
    }

    #[test]
    fn spread_is_population_sd() {
        let s = Spread::of(&[1.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.sd), (2.0, 1.0));
    }

    proptest! {
        #[test]
        fn folds_partition_and_balance(
            classes in prop::collection::vec(0u8..4, 5..80),
            unlabeled in prop_oneof![Just(0usize), 5usize..120],
            seed in 0u64..1000,
        ) {
            let labeled: Vec<LabelVector> = classes
                .iter()
                .map(|&c| match c { 0 => [1, -1, -1], 1 => [-1, 1, -1], 2 => [1, -1, 1], _ => [-1, -1, -1] })
                .collect();
            let labels = cohort(&labeled, unlabeled);
            let folds = stratified_folds(&labels, 5, seed).unwrap();
            prop_assert_eq!(folds.len(), labels.len());
            prop_assert!(folds.iter().all(|&f| f < 5));
            let n_lab = labeled.len() as f64;
            for f in 0..5 {
                let members: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == f).collect();
                let lab = members.iter().filter(|&&i| labels[i].is_some()).count() as f64;
                let unl = members.len() as f64 - lab;
                prop_assert!((lab - n_lab / 5.0).abs() < 1.0, "fold {} labeled {}", f, lab);
                prop_assert!((unl - unlabeled as f64 / 5.0).abs() < 1.0, "fold {} unlabeled {}", f, unl);
                for k in 0..3 {
                    let pos = members.iter().filter(|&&i| labels[i].is_some_and(|y| y[k] > 0)).count() as f64;
                    let total = labeled.iter().filter(|y| y[k] > 0).count() as f64;
                    prop_assert!((pos - total / 5.0).abs() <= 2.0, "class {} fold {}: {} vs {}", k, f, pos, total / 5.0);
                }
            }
        }
    }
}
