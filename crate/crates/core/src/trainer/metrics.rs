//! Confusion counts and the four reported metrics.

use serde::{Deserialize, Serialize};

/// Test metrics with MI as the positive class.
///
/// Percentages are stored at full precision; metrics whose denominator is
/// zero are `None` (reported as "n/a", never 0 or 100).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u32,
    pub fp: u32,
    pub tn: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
}

fn percent(numerator: u32, denominator: u32) -> Option<f64> {
    if denominator == 0 {
        None
    } else {
        Some(100.0 * numerator as f64 / denominator as f64)
    }
}

impl Metrics {
    pub fn from_counts(tp: u32, fp: u32, tn: u32, fn_: u32) -> Self {
        Metrics {
            tp,
            fp,
            tn,
            fn_,
            accuracy: percent(tp + tn, tp + tn + fp + fn_),
            sensitivity: percent(tp, tp + fn_),
            specificity: percent(tn, tn + fp),
            precision: percent(tp, tp + fp),
        }
    }

    pub fn total(&self) -> u32 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Formats a percentage to two decimals, or "n/a" when undefined.
    pub fn fmt_percent(value: Option<f64>) -> String {
        match value {
            Some(v) => format!("{v:.2}"),
            None => "n/a".to_string(),
        }
    }
}

impl std::fmt::Display for Metrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "accuracy {}% sensitivity {}% specificity {}% precision {}% \
             (TP {} FP {} TN {} FN {})",
            Metrics::fmt_percent(self.accuracy),
            Metrics::fmt_percent(self.sensitivity),
            Metrics::fmt_percent(self.specificity),
            Metrics::fmt_percent(self.precision),
            self.tp,
            self.fp,
            self.tn,
            self.fn_
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_classifier_scores_100_everywhere() {
        let m = Metrics::from_counts(5, 0, 7, 0);
        assert_eq!(m.accuracy, Some(100.0));
        assert_eq!(m.sensitivity, Some(100.0));
        assert_eq!(m.specificity, Some(100.0));
        assert_eq!(m.precision, Some(100.0));
    }

    #[test]
    fn hand_evaluated_confusion_arithmetic() {
        // TP=2 FN=1 TN=3 FP=0
        let m = Metrics::from_counts(2, 0, 3, 1);
        assert!((m.accuracy.unwrap() - 83.33).abs() < 0.005);
        assert!((m.sensitivity.unwrap() - 66.67).abs() < 0.005);
        assert_eq!(m.specificity, Some(100.0));
        assert_eq!(m.precision, Some(100.0));
    }

    #[test]
    fn zero_denominators_are_undefined_not_zero() {
        // No positive predictions although positives exist.
        let m = Metrics::from_counts(0, 0, 3, 2);
        assert_eq!(m.precision, None);
        assert_eq!(Metrics::fmt_percent(m.precision), "n/a");
        assert!(m.sensitivity.is_some());

        let empty = Metrics::from_counts(0, 0, 0, 0);
        assert_eq!(empty.accuracy, None);
    }

    #[test]
    fn metrics_match_an_independent_oracle() {
        use rand::Rng;
        let mut rng = crate::seed::rng_from(31);
        for _ in 0..500 {
            let (tp, fp, tn, fn_) = (
                rng.gen_range(0..50u32),
                rng.gen_range(0..50u32),
                rng.gen_range(0..50u32),
                rng.gen_range(0..50u32),
            );
            let m = Metrics::from_counts(tp, fp, tn, fn_);
            let oracle = |num: u32, den: u32| 100.0 * num as f64 / den as f64;
            if tp + tn + fp + fn_ > 0 {
                let total = (tp + tn + fp + fn_) as f64;
                let acc = m.accuracy.unwrap();
                assert!((acc - oracle(tp + tn, tp + tn + fp + fn_)).abs() < 1e-12);
                // accuracy * total recovers the correct-count (to fp rounding).
                assert!((acc / 100.0 * total - (tp + tn) as f64).abs() < 1e-9);
            }
            if tp + fn_ > 0 {
                assert!((m.sensitivity.unwrap() - oracle(tp, tp + fn_)).abs() < 1e-12);
            }
            if tn + fp > 0 {
                assert!((m.specificity.unwrap() - oracle(tn, tn + fp)).abs() < 1e-12);
            }
            if tp + fp > 0 {
                assert!((m.precision.unwrap() - oracle(tp, tp + fp)).abs() < 1e-12);
            }
        }
    }
}
