//! Label-smoothed softmax cross-entropy.

use serde::{Deserialize, Serialize};

use super::{cast, NnError, Scalar};
use crate::dataset::Class;

/// Loss configuration: the label-smoothing strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Smoothing in [0, 0.5): the true class gets target 1 - eps, the other
    /// class eps, so targets always sum to 1.
    pub label_smoothing: f64,
}

impl LossConfig {
    pub fn new(label_smoothing: f64) -> Result<Self, NnError> {
        if !(0.0..0.5).contains(&label_smoothing) {
            return Err(NnError::BadLabelSmoothing(label_smoothing));
        }
        Ok(LossConfig { label_smoothing })
    }
}

/// Mean label-smoothed cross-entropy over the batch, plus the gradient
/// w.r.t. the logits: `(softmax - target) / batch`.
///
/// Log-probabilities use max-subtracted log-sum-exp; internal arithmetic is
/// f64 for both f32 and f64 instantiations.
pub fn smoothed_cross_entropy<T: Scalar>(
    logits: &[T],
    labels: &[Class],
    config: &LossConfig,
) -> (T, Vec<T>) {
    let batch = labels.len();
    assert!(batch > 0, "empty batch");
    let classes = logits.len() / batch;
    debug_assert_eq!(logits.len(), batch * classes);
    let eps = config.label_smoothing;
    let off_target = eps / (classes - 1) as f64;

    let mut loss = 0.0f64;
    let mut grad = vec![T::zero(); logits.len()];
    for b in 0..batch {
        let row: Vec<f64> = logits[b * classes..(b + 1) * classes]
            .iter()
            .map(|v| v.to_f64().unwrap())
            .collect();
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum_exp = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();

        let true_ix = labels[b].index();
        for k in 0..classes {
            let target = if k == true_ix { 1.0 - eps } else { off_target };
            let log_p = row[k] - log_sum_exp;
            loss -= target * log_p;
            grad[b * classes + k] = cast((log_p.exp() - target) / batch as f64);
        }
    }
    (cast(loss / batch as f64), grad)
}
