use serde::Serialize;

use super::{Class, LabelVector};
use crate::error::{Error, Result};

/// Evaluation of three-label predictions against truth.
///
/// Per-class AUC and F1 are `None` for a class with no positive truth; such
/// classes are left out of the macro averages and of the pooled micro-F1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub n: usize,
    /// Exact match of the whole label vector.
    pub accuracy: f64,
    pub class_accuracy: [f64; 3],
    pub class_auc: [Option<f64>; 3],
    pub class_f1: [Option<f64>; 3],
    pub auc: Option<f64>,
    pub micro_f1: Option<f64>,
    pub macro_f1: Option<f64>,
}

/// Area under the ROC curve as the fraction of (positive, negative) pairs
/// ranked correctly, ties counting one half. `None` without both classes.
pub fn auc(truth: &[bool], scores: &[f64]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..truth.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n_pos = truth.iter().filter(|&&t| t).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    // Mann-Whitney: average ranks over tie groups
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let mid_rank = (start + end + 1) as f64 / 2.0;
        rank_sum += mid_rank * idx[start..end].iter().filter(|&&i| truth[i]).count() as f64;
        start = end;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// F1 from counts; `None` when the truth has no positives.
pub fn f1(tp: usize, fp: usize, fn_: usize) -> Option<f64> {
    if tp + fn_ == 0 {
        return None;
    }
    Some(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn evaluate(labels: &[LabelVector], scores: &[[f64; 3]], truth: &[LabelVector]) -> Result<Metrics> {
    let n = truth.len();
    if labels.len() != n || scores.len() != n {
        return Err(Error::Misaligned(format!(
            "{} predictions, {} score rows, {n} truths",
            labels.len(),
            scores.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    }
    let exact = labels.iter().zip(truth).filter(|(p, t)| p == t).count();
    let mut class_accuracy = [0.0; 3];
    let mut class_auc = [None; 3];
    let mut class_f1 = [None; 3];
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for class in Class::ALL {
        let k = class.index();
        let t: Vec<bool> = truth.iter().map(|y| y[k] > 0).collect();
        let p: Vec<bool> = labels.iter().map(|y| y[k] > 0).collect();
        let s: Vec<f64> = scores.iter().map(|s| s[k]).collect();
        let count = |want_t: bool, want_p: bool| t.iter().zip(&p).filter(|&(&a, &b)| a == want_t && b == want_p).count();
        let (tp, fp, fn_, tn) = (count(true, true), count(false, true), count(true, false), count(false, false));
        class_accuracy[k] = (tp + tn) as f64 / n as f64;
        class_auc[k] = auc(&t, &s);
        class_f1[k] = f1(tp, fp, fn_);
        if class_f1[k].is_none() {
            log::warn!("class {class} has no positives in truth; its AUC and F1 are absent");
        } else {
            tp_all += tp;
            fp_all += fp;
            fn_all += fn_;
        }
    }
    Ok(Metrics {
        n,
        accuracy: exact as f64 / n as f64,
        class_accuracy,
        auc: mean(class_auc.iter().flatten().copied()),
        micro_f1: if class_f1.iter().any(Option::is_some) { f1(tp_all, fp_all, fn_all) } else { None },
        macro_f1: mean(class_f1.iter().flatten().copied()),
        class_auc,
        class_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct pair count: P(score_pos > score_neg) + 0.5 P(equal).
    fn pair_count_auc(truth: &[bool], scores: &[f64]) -> Option<f64> {
        let mut hits = 0.0;
        let mut pairs = 0.0;
        for i in 0..truth.len() {
            for j in 0..truth.len() {
                if truth[i] && !truth[j] {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        hits += 1.0;
                    } else if scores[i] == scores[j] {
                        hits += 0.5;
                    }
                }
            }
        }
        (pairs > 0.0).then(|| hits / pairs)
    }

    #[test]
    fn hand_case_auc() {
        // one of the four (positive, negative) pairs is ordered wrongly
        let truth = [true, true, false, false];
        let scores = [0.9, 0.2, 0.4, 0.1];
        assert_eq!(pair_count_auc(&truth, &scores), Some(0.75));
        assert_eq!(auc(&truth, &scores), Some(0.75));
    }

    #[test]
    fn perfect_predictions() {
        let truth = vec![[1, -1, -1], [-1, 1, -1], [-1, -1, 1], [-1, -1, -1]];
        let scores: Vec<[f64; 3]> = truth.iter().map(|y| y.map(f64::from)).collect();
        let m = evaluate(&truth, &scores, &truth).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.auc, Some(1.0));
        assert_eq!(m.micro_f1, Some(1.0));
        assert_eq!(m.macro_f1, Some(1.0));
    }

    #[test]
    fn all_negative() {
        let truth = vec![[-1, -1, -1]; 4];
        let scores = vec![[-1.0; 3]; 4];
        let m = evaluate(&truth, &scores, &truth).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.micro_f1, None);
        assert_eq!(m.macro_f1, None);
        assert_eq!(m.auc, None);
    }

    #[test]
    fn absent_class_excluded_from_macro() {
        let truth = vec![[1, -1, -1], [-1, -1, -1], [1, -1, 1], [-1, -1, -1]];
        let labels = vec![[1, -1, -1], [1, 1, -1], [1, -1, -1], [-1, -1, -1]];
        let scores: Vec<[f64; 3]> = labels.iter().map(|y| y.map(f64::from)).collect();
        let m = evaluate(&labels, &scores, &truth).unwrap();
        assert_eq!(m.class_f1[1], None);
        assert_eq!(m.class_f1[0], Some(0.8));
        assert_eq!(m.class_f1[2], Some(0.0));
        assert_eq!(m.macro_f1, Some(0.4));
        // pooled over cr and io: tp 2, fp 1, fn 1
        assert_eq!(m.micro_f1, Some(4.0 / 6.0));
        assert_eq!(m.accuracy, 0.5);
    }

    #[test]
    fn misaligned_rejected() {
        assert!(evaluate(&[[1, 1, 1]], &[], &[[1, 1, 1]]).is_err());
    }

    fn label_vec() -> impl Strategy<Value = LabelVector> {
        prop::array::uniform3(prop_oneof![Just(1i8), Just(-1i8)])
    }

    proptest! {
        #[test]
        fn auc_matches_pair_count(
            data in prop::collection::vec((any::<bool>(), -3i32..3), 1..40)
        ) {
            let truth: Vec<bool> = data.iter().map(|d| d.0).collect();
            let scores: Vec<f64> = data.iter().map(|d| f64::from(d.1) * 0.5).collect();
            let a = auc(&truth, &scores);
            let b = pair_count_auc(&truth, &scores);
            prop_assert_eq!(a.is_some(), b.is_some());
            if let (Some(a), Some(b)) = (a, b) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn micro_f1_between_class_extremes(
            rows in prop::collection::vec((label_vec(), label_vec()), 1..30)
        ) {
            let truth: Vec<LabelVector> = rows.iter().map(|r| r.0).collect();
            let labels: Vec<LabelVector> = rows.iter().map(|r| r.1).collect();
            let scores: Vec<[f64; 3]> = labels.iter().map(|y| y.map(f64::from)).collect();
            let m = evaluate(&labels, &scores, &truth).unwrap();
            let present: Vec<f64> = m.class_f1.iter().flatten().copied().collect();
            if let Some(micro) = m.micro_f1 {
                let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(micro >= lo - 1e-12 && micro <= hi + 1e-12);
            } else {
                prop_assert!(present.is_empty());
            }
        }
    }
}
