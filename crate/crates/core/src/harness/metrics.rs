//! Classification metrics over one evaluation: accuracy, macro precision and
//! recall, macro F1, and the squared error between ordinal level indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mse: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Classes whose precision or recall was undefined (no predictions or no
    /// true members) and was counted as zero.
    pub undefined_classes: usize,
}

pub fn compute_metrics(predictions: &[usize], labels: &[usize], k: usize) -> Result<RunMetrics> {
    if predictions.len() != labels.len() {
        return Err(Error::MetricLength {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::MetricLength {
            predictions: 0,
            labels: 0,
        });
    }
    let mut confusion = vec![vec![0usize; k]; k];
    let mut sq_err = 0.0f64;
    for (&p, &t) in predictions.iter().zip(labels) {
        if p >= k {
            return Err(Error::ClassRange { value: p, k });
        }
        if t >= k {
            return Err(Error::ClassRange { value: t, k });
        }
        confusion[t][p] += 1;
        let d = p as f64 - t as f64;
        sq_err += d * d;
    }
    let total = predictions.len() as f64;
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();

    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut f1_sum = 0.0;
    let mut undefined = 0usize;
    for c in 0..k {
        let tp = confusion[c][c] as f64;
        let predicted: usize = (0..k).map(|t| confusion[t][c]).sum();
        let actual: usize = confusion[c].iter().sum();
        let (p, p_defined) = if predicted > 0 {
            (tp / predicted as f64, true)
        } else {
            (0.0, false)
        };
        let (r, r_defined) = if actual > 0 {
            (tp / actual as f64, true)
        } else {
            (0.0, false)
        };
        if !p_defined || !r_defined {
            undefined += 1;
        }
        precision_sum += p;
        recall_sum += r;
        f1_sum += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }

    Ok(RunMetrics {
        accuracy: correct as f64 / total,
        precision: precision_sum / k as f64,
        recall: recall_sum / k as f64,
        f1: f1_sum / k as f64,
        mse: sq_err / total,
        confusion,
        undefined_classes: undefined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let labels = vec![0, 1, 2, 3, 4, 5, 6];
        let m = compute_metrics(&labels, &labels, 7).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.mse, 0.0);
        assert_eq!(m.undefined_classes, 0);
    }

    #[test]
    fn hand_computed_binary_case() {
        let labels = [0, 0, 1, 1];
        let preds = [0, 1, 1, 1];
        let m = compute_metrics(&preds, &labels, 2).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert!((m.precision - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((m.recall - 0.75).abs() < 1e-12);
        assert_eq!(m.mse, 0.25);
        assert_eq!(m.confusion, vec![vec![1, 1], vec![0, 2]]);
        // F1 per class: 2*1*0.5/1.5 = 2/3; 2*(2/3)*1/(5/3) = 0.8
        assert!((m.f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn collapsed_predictor_on_balanced_labels() {
        let labels: Vec<usize> = (0..70).map(|i| i % 7).collect();
        let preds = vec![3usize; 70];
        let m = compute_metrics(&preds, &labels, 7).unwrap();
        assert!((m.accuracy - 1.0 / 7.0).abs() < 1e-12);
        // Six classes have no predictions -> counted with zero precision.
        assert_eq!(m.undefined_classes, 6);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(compute_metrics(&[0, 1], &[0], 2).is_err());
        assert!(compute_metrics(&[], &[], 2).is_err());
        assert!(compute_metrics(&[5], &[0], 2).is_err());
    }

    proptest! {
        #[test]
        fn confusion_consistency(
            pairs in proptest::collection::vec((0usize..5, 0usize..5), 1..120),
        ) {
            let preds: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let labels: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let m = compute_metrics(&preds, &labels, 5).unwrap();
            // Row sums total the evaluation size.
            let total: usize = m.confusion.iter().flatten().sum();
            prop_assert_eq!(total, pairs.len());
            // Trace-derived accuracy equals the reported accuracy exactly.
            let trace: usize = (0..5).map(|c| m.confusion[c][c]).sum();
            prop_assert_eq!(m.accuracy, trace as f64 / pairs.len() as f64);
            prop_assert!(m.precision >= 0.0 && m.precision <= 1.0);
            prop_assert!(m.recall >= 0.0 && m.recall <= 1.0);
            prop_assert!(m.f1 >= 0.0 && m.f1 <= 1.0);
        }

        #[test]
        fn permutation_invariant(
            pairs in proptest::collection::vec((0usize..4, 0usize..4), 2..60),
            seed in 0u64..100,
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let preds: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let labels: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let base = compute_metrics(&preds, &labels, 4).unwrap();
            let mut shuffled = pairs.clone();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            shuffled.shuffle(&mut rng);
            let preds2: Vec<usize> = shuffled.iter().map(|p| p.0).collect();
            let labels2: Vec<usize> = shuffled.iter().map(|p| p.1).collect();
            let permuted = compute_metrics(&preds2, &labels2, 4).unwrap();
            prop_assert_eq!(base.confusion, permuted.confusion);
            prop_assert_eq!(base.accuracy, permuted.accuracy);
            prop_assert_eq!(base.mse, permuted.mse);
        }
    }
}
