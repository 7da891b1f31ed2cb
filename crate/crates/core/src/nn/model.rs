//! The full network: 8 x (conv -> relu -> batchnorm), flatten, dense head.
//!
//! Batch norm comes *after* the activation; that ordering is fixed by
//! design, not configurable. Train-mode forward returns the batch
//! statistics in the cache and leaves the parameters untouched; the caller
//! applies the running-stat update explicitly, so evaluation stays a pure
//! function and finite-difference checks see no hidden state.

use rand::Rng;

use super::batchnorm::{bn_backward, bn_forward_eval, bn_forward_train, BnShape};
use super::conv::{conv1d_backward, conv1d_forward, ConvShape};
use super::dense::{dense_backward, dense_forward};
use super::relu::{relu_backward, relu_forward};
use super::{cast, ArchConfig, NnError, Scalar};

/// Learnable parameters and running statistics of one conv+bn layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayerParams<T> {
    /// `[out_ch x in_ch x kernel]`
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub bn_gamma: Vec<T>,
    pub bn_beta: Vec<T>,
    /// Non-learnable running statistics, updated only in train mode.
    pub bn_running_mean: Vec<T>,
    pub bn_running_var: Vec<T>,
}

/// All parameters of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub arch: ArchConfig,
    pub conv: Vec<ConvLayerParams<T>>,
    /// `[flatten_dim x num_classes]`
    pub dense_weights: Vec<T>,
    pub dense_bias: Vec<T>,
}

/// Gradients for one conv layer's learnables.
#[derive(Debug, Clone)]
pub struct ConvLayerGrads<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub bn_gamma: Vec<T>,
    pub bn_beta: Vec<T>,
}

/// Gradients shaped like the learnable part of [`ModelParams`].
#[derive(Debug, Clone)]
pub struct ModelGrads<T> {
    pub conv: Vec<ConvLayerGrads<T>>,
    pub dense_weights: Vec<T>,
    pub dense_bias: Vec<T>,
}

impl<T: Scalar> ModelParams<T> {
    /// Learnable tensors in the canonical (checkpoint) order: per layer
    /// weights, bias, gamma, beta; then dense weights and bias.
    pub fn learnables(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(self.conv.len() * 4 + 2);
        for layer in &self.conv {
            out.push(layer.weights.as_slice());
            out.push(layer.bias.as_slice());
            out.push(layer.bn_gamma.as_slice());
            out.push(layer.bn_beta.as_slice());
        }
        out.push(self.dense_weights.as_slice());
        out.push(self.dense_bias.as_slice());
        out
    }

    pub fn learnables_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(self.conv.len() * 4 + 2);
        for layer in &mut self.conv {
            out.push(layer.weights.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
            out.push(layer.bn_gamma.as_mut_slice());
            out.push(layer.bn_beta.as_mut_slice());
        }
        out.push(self.dense_weights.as_mut_slice());
        out.push(self.dense_bias.as_mut_slice());
        out
    }

    pub fn num_learnable_values(&self) -> usize {
        self.learnables().iter().map(|t| t.len()).sum()
    }

    fn conv_shape(&self, layer: usize, batch: usize, in_len: usize) -> ConvShape {
        ConvShape {
            batch,
            in_ch: self.arch.layer_in_channels(layer),
            in_len,
            out_ch: self.arch.channels,
            kernel: self.arch.kernel,
            stride: self.arch.stride,
        }
    }
}

impl<T: Scalar> ModelGrads<T> {
    /// Zeroed gradients matching `params`.
    pub fn zeros_like(params: &ModelParams<T>) -> Self {
        ModelGrads {
            conv: params
                .conv
                .iter()
                .map(|l| ConvLayerGrads {
                    weights: vec![T::zero(); l.weights.len()],
                    bias: vec![T::zero(); l.bias.len()],
                    bn_gamma: vec![T::zero(); l.bn_gamma.len()],
                    bn_beta: vec![T::zero(); l.bn_beta.len()],
                })
                .collect(),
            dense_weights: vec![T::zero(); params.dense_weights.len()],
            dense_bias: vec![T::zero(); params.dense_bias.len()],
        }
    }

    /// Same canonical order as [`ModelParams::learnables`].
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(self.conv.len() * 4 + 2);
        for layer in &self.conv {
            out.push(layer.weights.as_slice());
            out.push(layer.bias.as_slice());
            out.push(layer.bn_gamma.as_slice());
            out.push(layer.bn_beta.as_slice());
        }
        out.push(self.dense_weights.as_slice());
        out.push(self.dense_bias.as_slice());
        out
    }
}

/// Builds a freshly initialized model.
///
/// Conv and dense weights draw from a zero-mean uniform distribution with
/// half-width `sqrt(2 / fan_in)`; biases and bn beta start at zero, bn gamma
/// at one, running mean at zero and running variance at one. The same seed
/// always produces bit-identical parameters.
pub fn build_model<T: Scalar>(arch: &ArchConfig, rng: &mut impl Rng) -> ModelParams<T> {
    let mut conv = Vec::with_capacity(arch.num_layers);
    for layer in 0..arch.num_layers {
        let in_ch = arch.layer_in_channels(layer);
        let fan_in = in_ch * arch.kernel;
        let bound = (2.0 / fan_in as f64).sqrt();
        let weights = (0..arch.channels * in_ch * arch.kernel)
            .map(|_| cast(rng.gen_range(-bound..bound)))
            .collect();
        conv.push(ConvLayerParams {
            weights,
            bias: vec![T::zero(); arch.channels],
            bn_gamma: vec![T::one(); arch.channels],
            bn_beta: vec![T::zero(); arch.channels],
            bn_running_mean: vec![T::zero(); arch.channels],
            bn_running_var: vec![T::one(); arch.channels],
        });
    }
    let flatten = arch.flatten_dim();
    let bound = (2.0 / flatten as f64).sqrt();
    let dense_weights = (0..flatten * arch.num_classes)
        .map(|_| cast(rng.gen_range(-bound..bound)))
        .collect();
    ModelParams {
        arch: arch.clone(),
        conv,
        dense_weights,
        dense_bias: vec![T::zero(); arch.num_classes],
    }
}

/// Per-layer activations cached for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache<T> {
    /// Input to this layer's conv (the previous layer's bn output).
    input: Vec<T>,
    /// Conv output before the activation (the relu mask source).
    conv_out: Vec<T>,
    /// Normalized bn values plus the batch statistics.
    x_hat: Vec<T>,
    batch_mean: Vec<T>,
    batch_var: Vec<T>,
    in_len: usize,
}

/// Everything the backward pass and the running-stat update need.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    batch: usize,
    layers: Vec<LayerCache<T>>,
    /// Flattened input to the dense head.
    flat: Vec<T>,
}

fn check_input_shape<T: Scalar>(
    params: &ModelParams<T>,
    input: &[T],
    batch: usize,
) -> Result<(), NnError> {
    let expected = batch * params.arch.num_leads * params.arch.window_len;
    if input.len() != expected {
        return Err(NnError::ShapeMismatch {
            what: "model input",
            expected,
            actual: input.len(),
        });
    }
    Ok(())
}

/// Train-mode forward: returns logits and the activation cache. Running
/// statistics are *not* modified; apply [`update_running_stats`] after the
/// optimizer step.
pub fn model_forward_train<T: Scalar>(
    params: &ModelParams<T>,
    input: &[T],
    batch: usize,
) -> Result<(Vec<T>, ForwardCache<T>), NnError> {
    check_input_shape(params, input, batch)?;
    let arch = &params.arch;
    let mut layers = Vec::with_capacity(arch.num_layers);
    let mut current = input.to_vec();
    let mut in_len = arch.window_len;

    for (i, layer) in params.conv.iter().enumerate() {
        let shape = params.conv_shape(i, batch, in_len);
        let conv_out = conv1d_forward(&current, &layer.weights, &layer.bias, &shape)?;
        let relu_out = relu_forward(&conv_out);
        let out_len = shape.out_len();
        let bn_shape = BnShape {
            batch,
            channels: arch.channels,
            len: out_len,
        };
        let bn = bn_forward_train(&relu_out, &layer.bn_gamma, &layer.bn_beta, &bn_shape, arch.bn_eps)?;
        layers.push(LayerCache {
            input: std::mem::replace(&mut current, bn.y),
            conv_out,
            x_hat: bn.x_hat,
            batch_mean: bn.mean,
            batch_var: bn.var,
            in_len,
        });
        in_len = out_len;
    }

    let flat = current;
    let logits = dense_forward(
        &flat,
        &params.dense_weights,
        &params.dense_bias,
        arch.flatten_dim(),
        arch.num_classes,
    )?;
    Ok((logits, ForwardCache { batch, layers, flat }))
}

/// Eval-mode forward using running statistics. Pure: same input, same
/// parameters, bitwise-same logits, nothing mutated.
pub fn model_forward_eval<T: Scalar>(
    params: &ModelParams<T>,
    input: &[T],
    batch: usize,
) -> Result<Vec<T>, NnError> {
    check_input_shape(params, input, batch)?;
    let arch = &params.arch;
    let mut current = input.to_vec();
    let mut in_len = arch.window_len;

    for (i, layer) in params.conv.iter().enumerate() {
        let shape = params.conv_shape(i, batch, in_len);
        let conv_out = conv1d_forward(&current, &layer.weights, &layer.bias, &shape)?;
        let relu_out = relu_forward(&conv_out);
        let out_len = shape.out_len();
        let bn_shape = BnShape {
            batch,
            channels: arch.channels,
            len: out_len,
        };
        current = bn_forward_eval(
            &relu_out,
            &layer.bn_gamma,
            &layer.bn_beta,
            &layer.bn_running_mean,
            &layer.bn_running_var,
            &bn_shape,
            arch.bn_eps,
        )?;
        in_len = out_len;
    }

    dense_forward(
        &current,
        &params.dense_weights,
        &params.dense_bias,
        arch.flatten_dim(),
        arch.num_classes,
    )
}

/// Reverse-mode gradients for all learnables. Running statistics receive
/// no gradient.
pub fn model_backward<T: Scalar>(
    params: &ModelParams<T>,
    cache: &ForwardCache<T>,
    d_logits: &[T],
) -> Result<ModelGrads<T>, NnError> {
    let arch = &params.arch;
    let batch = cache.batch;

    let (mut d_current, d_dense_w, d_dense_b) = {
        let (d_flat, d_w, d_b) = dense_backward(
            &cache.flat,
            &params.dense_weights,
            d_logits,
            arch.flatten_dim(),
            arch.num_classes,
        );
        (d_flat, d_w, d_b)
    };

    let mut conv_grads: Vec<ConvLayerGrads<T>> = Vec::with_capacity(arch.num_layers);
    for (i, (layer, lc)) in params.conv.iter().zip(&cache.layers).enumerate().rev() {
        let out_len = lc.in_len.div_ceil(arch.stride);
        let bn_shape = BnShape {
            batch,
            channels: arch.channels,
            len: out_len,
        };
        let (d_relu, d_gamma, d_beta) = bn_backward(
            &d_current,
            &lc.x_hat,
            &lc.batch_var,
            &layer.bn_gamma,
            &bn_shape,
            arch.bn_eps,
        )?;
        let d_conv = relu_backward(&lc.conv_out, &d_relu);
        let shape = params.conv_shape(i, batch, lc.in_len);
        let (d_input, d_weights, d_bias) =
            conv1d_backward(&lc.input, &layer.weights, &d_conv, &shape)?;
        conv_grads.push(ConvLayerGrads {
            weights: d_weights,
            bias: d_bias,
            bn_gamma: d_gamma,
            bn_beta: d_beta,
        });
        d_current = d_input;
    }
    conv_grads.reverse();

    Ok(ModelGrads {
        conv: conv_grads,
        dense_weights: d_dense_w,
        dense_bias: d_dense_b,
    })
}

/// Applies the exponential running-stat update from a train-mode forward:
/// `running <- (1 - momentum) * running + momentum * batch_stat`.
pub fn update_running_stats<T: Scalar>(params: &mut ModelParams<T>, cache: &ForwardCache<T>) {
    let momentum: T = cast(params.arch.bn_momentum);
    let keep = T::one() - momentum;
    for (layer, lc) in params.conv.iter_mut().zip(&cache.layers) {
        for (r, &m) in layer.bn_running_mean.iter_mut().zip(&lc.batch_mean) {
            *r = keep * *r + momentum * m;
        }
        for (r, &v) in layer.bn_running_var.iter_mut().zip(&lc.batch_var) {
            *r = keep * *r + momentum * v;
        }
    }
}
