//! Report metrics: rank-statistic ROC AUC and the confusion-matrix scores,
//! with trainee fixed as the positive class and faculty as the negative.

use serde::{Deserialize, Serialize};

use crate::classifiers::POSITIVE_CLASS;
use crate::data::Label;

use super::EvalError;

/// The five reported metrics of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub auc: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

pub(crate) const METRIC_NAMES: [&str; 5] = ["auc", "f1", "accuracy", "sensitivity", "specificity"];

impl MetricSet {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "auc" => Some(self.auc),
            "f1" => Some(self.f1),
            "accuracy" => Some(self.accuracy),
            "sensitivity" => Some(self.sensitivity),
            "specificity" => Some(self.specificity),
            _ => None,
        }
    }

    pub(crate) fn from_fn(mut f: impl FnMut(&str) -> f64) -> MetricSet {
        MetricSet {
            auc: f("auc"),
            f1: f("f1"),
            accuracy: f("accuracy"),
            sensitivity: f("sensitivity"),
            specificity: f("specificity"),
        }
    }
}

/// Rank-statistic AUC with midranks for tied scores:
/// `(sum of positive ranks - P(P+1)/2) / (P N)`. Equals the probability
/// that a random positive outscores a random negative, ties counting 1/2.
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64, EvalError> {
    assert_eq!(scores.len(), labels.len(), "scores and labels must align");
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::InvalidSettings("scores contain NaN".into()));
    }
    let p = labels.iter().filter(|&&l| l == POSITIVE_CLASS).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return Err(EvalError::SingleClassTruth);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; tied scores all receive the midrank.
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == POSITIVE_CLASS {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }

    let p_f = p as f64;
    Ok((rank_sum_pos - p_f * (p_f + 1.0) / 2.0) / (p_f * n as f64))
}

/// Confusion-matrix scores of hard label predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionMetrics {
    pub f1: f64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Sensitivity counts the positive (trainee) class, specificity the
/// negative (faculty) class; `f1 = 2TP / (2TP + FP + FN)`.
pub fn confusion_metrics(
    predicted: &[Label],
    truth: &[Label],
) -> Result<ConfusionMetrics, EvalError> {
    assert_eq!(predicted.len(), truth.len(), "label vectors must align");
    let (mut tp, mut fn_, mut tn, mut fp) = (0usize, 0usize, 0usize, 0usize);
    for (&pr, &tr) in predicted.iter().zip(truth) {
        match (tr == POSITIVE_CLASS, pr == POSITIVE_CLASS) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
        }
    }
    if tp + fn_ == 0 || tn + fp == 0 {
        return Err(EvalError::SingleClassTruth);
    }
    Ok(ConfusionMetrics {
        f1: 2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64),
        accuracy: (tp + tn) as f64 / predicted.len() as f64,
        sensitivity: tp as f64 / (tp + fn_) as f64,
        specificity: tn as f64 / (tn + fp) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label::{Faculty as F, Trainee as T};

    #[test]
    fn auc_worked_example() {
        let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[F, F, T, T]).unwrap();
        assert!((auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn auc_all_ties_is_half() {
        let auc = roc_auc(&[0.3; 6], &[F, F, F, T, T, T]).unwrap();
        assert!((auc - 0.5).abs() < 1e-15);
    }

    #[test]
    fn auc_perfect_separation_is_one() {
        let auc = roc_auc(&[0.1, 0.2, 0.8, 0.9], &[F, F, T, T]).unwrap();
        assert_eq!(auc, 1.0);
        let auc = roc_auc(&[0.9, 0.8, 0.2, 0.1], &[F, F, T, T]).unwrap();
        assert_eq!(auc, 0.0);
    }

    #[test]
    fn auc_single_class_errors() {
        assert!(matches!(
            roc_auc(&[0.1, 0.2], &[T, T]),
            Err(EvalError::SingleClassTruth)
        ));
    }

    /// Brute-force pair counting, the oracle for the rank formula.
    pub(crate) fn pair_counting_auc(scores: &[f64], labels: &[Label]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            if li != T {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj != F {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_matches_pair_counting_with_ties() {
        let mut state = 0xDEADBEEFu64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        for case in 0..200 {
            let n = 4 + (case % 17);
            // Coarse score grid to force plenty of ties.
            let scores: Vec<f64> = (0..n).map(|_| (next() * 8.0).floor() / 8.0).collect();
            let mut labels: Vec<Label> = (0..n).map(|_| if next() > 0.5 { T } else { F }).collect();
            labels[0] = T;
            labels[1] = F;
            let fast = roc_auc(&scores, &labels).unwrap();
            let slow = pair_counting_auc(&scores, &labels);
            assert!((fast - slow).abs() < 1e-12, "case {case}: {fast} vs {slow}");
        }
    }

    #[test]
    fn label_flip_duality() {
        let scores = [0.3, 0.1, 0.9, 0.55, 0.55, 0.2];
        let labels = [T, F, T, F, T, F];
        let flipped: Vec<Label> = labels.iter().map(|l| l.flipped()).collect();
        let a = roc_auc(&scores, &labels).unwrap();
        let b = roc_auc(&scores, &flipped).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn confusion_worked_example() {
        // TP=3, FN=1, TN=2, FP=2.
        let truth = [T, T, T, T, F, F, F, F];
        let pred = [T, T, T, F, T, T, F, F];
        let m = confusion_metrics(&pred, &truth).unwrap();
        assert!((m.sensitivity - 0.75).abs() < 1e-15);
        assert!((m.specificity - 0.5).abs() < 1e-15);
        assert!((m.accuracy - 0.625).abs() < 1e-15);
        assert!((m.f1 - 6.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn confusion_trivials() {
        let truth = [T, T, F, F];
        let m = confusion_metrics(&truth, &truth).unwrap();
        assert_eq!(
            (m.f1, m.accuracy, m.sensitivity, m.specificity),
            (1.0, 1.0, 1.0, 1.0)
        );
        let m = confusion_metrics(&[T, T, T, T], &truth).unwrap();
        assert_eq!(m.sensitivity, 1.0);
        assert_eq!(m.specificity, 0.0);
    }

    #[test]
    fn confusion_flip_swaps_sensitivity_and_specificity() {
        let truth = [T, T, T, F, F, T, F, F];
        let pred = [T, F, T, F, T, T, F, F];
        let m = confusion_metrics(&pred, &truth).unwrap();
        let flipped_truth: Vec<Label> = truth.iter().map(|l| l.flipped()).collect();
        let flipped_pred: Vec<Label> = pred.iter().map(|l| l.flipped()).collect();
        let fm = confusion_metrics(&flipped_pred, &flipped_truth).unwrap();
        assert_eq!(m.sensitivity, fm.specificity);
        assert_eq!(m.specificity, fm.sensitivity);
        assert_eq!(m.accuracy, fm.accuracy);
    }

    #[test]
    fn accuracy_reconciles_with_sens_spec() {
        let truth = [T, T, T, F, F, T, F, F, F];
        let pred = [T, F, T, F, T, T, F, F, T];
        let m = confusion_metrics(&pred, &truth).unwrap();
        let p = truth.iter().filter(|&&l| l == T).count() as f64;
        let n = truth.len() as f64 - p;
        let recon = (m.sensitivity * p + m.specificity * n) / (p + n);
        assert!((m.accuracy - recon).abs() < 1e-12);
    }
}
