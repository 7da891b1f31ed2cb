//! Rectified-linear activation.

use super::Scalar;

/// Elementwise `max(x, 0)`.
pub fn relu_forward<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| v.max(T::zero())).collect()
}

/// Masks the upstream gradient with `indicator(pre_activation > 0)`.
pub fn relu_backward<T: Scalar>(pre_activation: &[T], d_out: &[T]) -> Vec<T> {
    debug_assert_eq!(pre_activation.len(), d_out.len());
    pre_activation
        .iter()
        .zip(d_out)
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect()
}
