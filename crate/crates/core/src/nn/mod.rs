//! From-scratch numerical core: strided 1D convolutions, post-activation
//! batch norm, label-smoothed cross-entropy, exact hand-derived backward
//! passes, and Adam.
//!
//! Everything is generic over [`Scalar`] so the exact same code paths run in
//! f32 for training and in f64 for finite-difference gradient checks. No
//! autodiff, no BLAS: the layer math is written out directly, and internal
//! parallelism only ever splits work across *independent* output slices
//! (each slice reduced sequentially in a fixed order), so results are
//! bitwise identical at any thread count.

mod adam;
mod batchnorm;
mod conv;
mod dense;
mod loss;
mod model;
mod relu;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use batchnorm::{bn_backward, bn_forward_eval, bn_forward_train, BnShape, BnTrainOutput};
pub use conv::{conv1d_backward, conv1d_forward, ConvShape};
pub use dense::{dense_backward, dense_forward};
pub use loss::{smoothed_cross_entropy, LossConfig};
pub use model::{
    build_model, model_backward, model_forward_eval, model_forward_train, update_running_stats,
    ConvLayerGrads, ConvLayerParams, ForwardCache, ModelGrads, ModelParams,
};
pub use relu::{relu_backward, relu_forward};

use serde::{Deserialize, Serialize};

/// Floating-point element type for all layer math.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::fmt::Debug
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for lossy f64 -> T conversion of constants.
pub(crate) fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite constant converts")
}

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("unsupported lead count {0} (must be 1, 2 or 3)")]
    UnsupportedLeadCount(usize),
    #[error("shape mismatch in {what}: expected {expected}, got {actual}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("batch norm needs at least 2 values per channel, got {0}")]
    DegenerateBatch(usize),
    #[error("non-finite gradient in parameter tensor {tensor}")]
    NonFiniteGradient { tensor: usize },
    #[error("label smoothing must be in [0, 0.5), got {0}")]
    BadLabelSmoothing(f64),
}

/// Network architecture descriptor.
///
/// Defaults follow the ConvNetQuake-derived design: 8 conv layers, 32
/// output channels each, kernel 3, stride 2, ceil-mode zero padding, then a
/// dense 2-class head. Channel width, kernel and stride stay configurable
/// so the architecture can be adjusted without code changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub num_leads: usize,
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub num_layers: usize,
    pub window_len: usize,
    pub num_classes: usize,
    pub bn_eps: f64,
    pub bn_momentum: f64,
}

impl ArchConfig {
    /// Standard architecture for a 1-3 lead input window of `window_len`
    /// samples (10 000 for 10 s at 1000 Hz).
    pub fn new(num_leads: usize, window_len: usize) -> Result<Self, NnError> {
        if !(1..=3).contains(&num_leads) {
            return Err(NnError::UnsupportedLeadCount(num_leads));
        }
        Ok(ArchConfig {
            num_leads,
            channels: 32,
            kernel: 3,
            stride: 2,
            num_layers: 8,
            window_len,
            num_classes: 2,
            bn_eps: 1e-5,
            bn_momentum: 0.1,
        })
    }

    /// Sequence of signal lengths through the conv stack, input first.
    /// Each layer halves (ceil) the length: 10 000 -> 5 000 -> ... -> 40.
    pub fn layer_lengths(&self) -> Vec<usize> {
        let mut lens = Vec::with_capacity(self.num_layers + 1);
        let mut len = self.window_len;
        lens.push(len);
        for _ in 0..self.num_layers {
            len = len.div_ceil(self.stride);
            lens.push(len);
        }
        lens
    }

    pub fn final_len(&self) -> usize {
        *self.layer_lengths().last().expect("at least the input length")
    }

    /// Dense-layer input width: final length times channel width.
    pub fn flatten_dim(&self) -> usize {
        self.final_len() * self.channels
    }

    /// Input channel count of conv layer `i` (0-based).
    pub fn layer_in_channels(&self, i: usize) -> usize {
        if i == 0 {
            self.num_leads
        } else {
            self.channels
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lead_counts() {
        assert!(matches!(
            ArchConfig::new(0, 10_000),
            Err(NnError::UnsupportedLeadCount(0))
        ));
        assert!(matches!(
            ArchConfig::new(4, 10_000),
            Err(NnError::UnsupportedLeadCount(4))
        ));
    }

    #[test]
    fn shape_chain_for_the_standard_window() {
        let arch = ArchConfig::new(2, 10_000).unwrap();
        assert_eq!(
            arch.layer_lengths(),
            vec![10_000, 5_000, 2_500, 1_250, 625, 313, 157, 79, 40]
        );
        assert_eq!(arch.flatten_dim(), 1_280);
    }

    #[test]
    fn odd_lengths_round_up() {
        let mut arch = ArchConfig::new(1, 7).unwrap();
        arch.num_layers = 3;
        assert_eq!(arch.layer_lengths(), vec![7, 4, 2, 1]);
    }
}
