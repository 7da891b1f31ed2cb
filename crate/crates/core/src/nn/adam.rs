//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use super::model::{ModelGrads, ModelParams};
use super::{cast, NnError, Scalar};

/// Adam hyperparameters. Defaults: lr 1e-4, beta1 0.9, beta2 0.999, eps 1e-8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper {
            lr,
            ..AdamHyper::default()
        }
    }
}

/// First/second moment estimates plus the step counter.
///
/// Moments are stored in the canonical learnable order of
/// [`ModelParams::learnables`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub hyper: AdamHyper,
    pub step_count: u64,
    pub first_moment: Vec<Vec<T>>,
    pub second_moment: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ModelParams<T>, hyper: AdamHyper) -> Self {
        let zeros: Vec<Vec<T>> = params
            .learnables()
            .iter()
            .map(|t| vec![T::zero(); t.len()])
            .collect();
        AdamState {
            hyper,
            step_count: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }
}

/// One Adam update:
/// `m <- b1*m + (1-b1)*g`, `v <- b2*v + (1-b2)*g^2`,
/// `theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)` with bias-corrected
/// `m_hat = m / (1 - b1^t)`, `v_hat = v / (1 - b2^t)`.
///
/// Rejects non-finite gradients before touching any state.
pub fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &ModelGrads<T>,
    state: &mut AdamState<T>,
) -> Result<(), NnError> {
    let grad_tensors = grads.tensors();
    for (ix, tensor) in grad_tensors.iter().enumerate() {
        if tensor.iter().any(|g| !g.is_finite()) {
            return Err(NnError::NonFiniteGradient { tensor: ix });
        }
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let h = state.hyper;
    let beta1: T = cast(h.beta1);
    let beta2: T = cast(h.beta2);
    let one_minus_beta1: T = cast(1.0 - h.beta1);
    let one_minus_beta2: T = cast(1.0 - h.beta2);
    let bias1: T = cast(1.0 - h.beta1.powi(t));
    let bias2: T = cast(1.0 - h.beta2.powi(t));
    let lr: T = cast(h.lr);
    let eps: T = cast(h.eps);

    for (((theta, g), m), v) in params
        .learnables_mut()
        .into_iter()
        .zip(grad_tensors)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        debug_assert_eq!(theta.len(), g.len());
        for i in 0..theta.len() {
            m[i] = beta1 * m[i] + one_minus_beta1 * g[i];
            v[i] = beta2 * v[i] + one_minus_beta2 * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            theta[i] = theta[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
