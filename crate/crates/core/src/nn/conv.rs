//! Strided 1D convolution (cross-correlation) with ceil-mode zero padding.

use rayon::prelude::*;

use super::{NnError, Scalar};

/// Shape bundle for one conv application.
///
/// Output length is `ceil(in_len / stride)`; with kernel 3 and stride 2 the
/// implicit zero padding is one sample on the left plus one on the right
/// when the input length is odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub batch: usize,
    pub in_ch: usize,
    pub in_len: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl ConvShape {
    pub fn out_len(&self) -> usize {
        self.in_len.div_ceil(self.stride)
    }

    pub fn pad_left(&self) -> usize {
        (self.kernel - 1) / 2
    }

    pub fn input_len(&self) -> usize {
        self.batch * self.in_ch * self.in_len
    }

    pub fn output_len(&self) -> usize {
        self.batch * self.out_ch * self.out_len()
    }

    pub fn weights_len(&self) -> usize {
        self.out_ch * self.in_ch * self.kernel
    }

    fn check(&self, what: &'static str, expected: usize, actual: usize) -> Result<(), NnError> {
        if expected != actual {
            return Err(NnError::ShapeMismatch {
                what,
                expected,
                actual,
            });
        }
        Ok(())
    }

    fn validate(&self, input: usize, weights: usize, bias: usize) -> Result<(), NnError> {
        self.check("conv input", self.input_len(), input)?;
        self.check("conv weights", self.weights_len(), weights)?;
        self.check("conv bias", self.out_ch, bias)
    }
}

/// Forward pass.
///
/// `out[b][oc][j] = bias[oc] + sum_ic sum_t w[oc][ic][t] * x[b][ic][j*stride - pad + t]`
/// with out-of-range input positions reading as zero.
pub fn conv1d_forward<T: Scalar>(
    input: &[T],
    weights: &[T],
    bias: &[T],
    shape: &ConvShape,
) -> Result<Vec<T>, NnError> {
    shape.validate(input.len(), weights.len(), bias.len())?;
    let out_len = shape.out_len();
    let (in_ch, in_len, kernel, stride) = (shape.in_ch, shape.in_len, shape.kernel, shape.stride);
    let pad = shape.pad_left() as isize;

    let mut output = vec![T::zero(); shape.output_len()];
    // Rows (b, oc) are independent; each is reduced sequentially.
    output
        .par_chunks_mut(out_len)
        .enumerate()
        .for_each(|(row, out_row)| {
            let b = row / shape.out_ch;
            let oc = row % shape.out_ch;
            let x_b = &input[b * in_ch * in_len..(b + 1) * in_ch * in_len];
            let w_oc = &weights[oc * in_ch * kernel..(oc + 1) * in_ch * kernel];
            for (j, out) in out_row.iter_mut().enumerate() {
                let start = (j * stride) as isize - pad;
                let t_lo = (-start).max(0) as usize;
                let t_hi = kernel.min((in_len as isize - start).max(0) as usize);
                let mut acc = bias[oc];
                for ic in 0..in_ch {
                    let x_row = &x_b[ic * in_len..(ic + 1) * in_len];
                    let w_row = &w_oc[ic * kernel..(ic + 1) * kernel];
                    for t in t_lo..t_hi {
                        acc = acc + w_row[t] * x_row[(start + t as isize) as usize];
                    }
                }
                *out = acc;
            }
        });
    Ok(output)
}

/// Backward pass: gradients w.r.t. input, weights and bias.
pub fn conv1d_backward<T: Scalar>(
    input: &[T],
    weights: &[T],
    d_out: &[T],
    shape: &ConvShape,
) -> Result<(Vec<T>, Vec<T>, Vec<T>), NnError> {
    shape.validate(input.len(), weights.len(), shape.out_ch)?;
    let out_len = shape.out_len();
    if d_out.len() != shape.output_len() {
        return Err(NnError::ShapeMismatch {
            what: "conv upstream gradient",
            expected: shape.output_len(),
            actual: d_out.len(),
        });
    }
    let (in_ch, in_len, out_ch) = (shape.in_ch, shape.in_len, shape.out_ch);
    let (kernel, stride) = (shape.kernel, shape.stride);
    let pad = shape.pad_left() as isize;

    // d_bias[oc] = sum over batch and positions of d_out.
    let mut d_bias = vec![T::zero(); out_ch];
    d_bias.par_iter_mut().enumerate().for_each(|(oc, db)| {
        let mut acc = T::zero();
        for b in 0..shape.batch {
            let row = &d_out[(b * out_ch + oc) * out_len..(b * out_ch + oc + 1) * out_len];
            for &g in row {
                acc = acc + g;
            }
        }
        *db = acc;
    });

    // d_w[oc][ic][t] = sum_{b,j} d_out[b][oc][j] * x[b][ic][j*stride - pad + t]
    let mut d_weights = vec![T::zero(); shape.weights_len()];
    d_weights
        .par_chunks_mut(in_ch * kernel)
        .enumerate()
        .for_each(|(oc, dw_oc)| {
            for b in 0..shape.batch {
                let g_row = &d_out[(b * out_ch + oc) * out_len..(b * out_ch + oc + 1) * out_len];
                let x_b = &input[b * in_ch * in_len..(b + 1) * in_ch * in_len];
                for (j, &g) in g_row.iter().enumerate() {
                    let start = (j * stride) as isize - pad;
                    let t_lo = (-start).max(0) as usize;
                    let t_hi = kernel.min((in_len as isize - start).max(0) as usize);
                    for ic in 0..in_ch {
                        let x_row = &x_b[ic * in_len..(ic + 1) * in_len];
                        let dw_row = &mut dw_oc[ic * kernel..(ic + 1) * kernel];
                        for t in t_lo..t_hi {
                            dw_row[t] = dw_row[t] + g * x_row[(start + t as isize) as usize];
                        }
                    }
                }
            }
        });

    // d_x[b][ic][i] = sum_{oc,j,t : j*stride - pad + t = i} w[oc][ic][t] * d_out[b][oc][j]
    let mut d_input = vec![T::zero(); shape.input_len()];
    d_input
        .par_chunks_mut(in_len)
        .enumerate()
        .for_each(|(row, dx_row)| {
            let b = row / in_ch;
            let ic = row % in_ch;
            for oc in 0..out_ch {
                let g_row = &d_out[(b * out_ch + oc) * out_len..(b * out_ch + oc + 1) * out_len];
                let w_row = &weights[(oc * in_ch + ic) * kernel..(oc * in_ch + ic + 1) * kernel];
                for (j, &g) in g_row.iter().enumerate() {
                    let start = (j * stride) as isize - pad;
                    let t_lo = (-start).max(0) as usize;
                    let t_hi = kernel.min((in_len as isize - start).max(0) as usize);
                    for t in t_lo..t_hi {
                        let i = (start + t as isize) as usize;
                        dx_row[i] = dx_row[i] + w_row[t] * g;
                    }
                }
            }
        });

    Ok((d_input, d_weights, d_bias))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(batch: usize, in_ch: usize, in_len: usize, out_ch: usize) -> ConvShape {
        ConvShape {
            batch,
            in_ch,
            in_len,
            out_ch,
            kernel: 3,
            stride: 2,
        }
    }

    /// Unpadded, unoptimized direct evaluation used as the oracle.
    fn naive_forward(input: &[f64], weights: &[f64], bias: &[f64], s: &ConvShape) -> Vec<f64> {
        let out_len = s.out_len();
        let mut out = vec![0.0; s.output_len()];
        for b in 0..s.batch {
            for oc in 0..s.out_ch {
                for j in 0..out_len {
                    let mut acc = bias[oc];
                    for ic in 0..s.in_ch {
                        for t in 0..s.kernel {
                            let i = (j * s.stride) as isize - s.pad_left() as isize + t as isize;
                            if i < 0 || i >= s.in_len as isize {
                                continue;
                            }
                            acc += weights[(oc * s.in_ch + ic) * s.kernel + t]
                                * input[(b * s.in_ch + ic) * s.in_len + i as usize];
                        }
                    }
                    out[(b * s.out_ch + oc) * out_len + j] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn identity_kernel_picks_every_second_sample() {
        // Kernel [0,1,0] centered at j*2 selects x[0], x[2].
        let s = shape(1, 1, 4, 1);
        let out = conv1d_forward(
            &[1.0f64, 2.0, 3.0, 4.0],
            &[0.0, 1.0, 0.0],
            &[0.0],
            &s,
        )
        .unwrap();
        assert_eq!(out, vec![1.0, 3.0]);
    }

    #[test]
    fn zero_weights_yield_constant_bias() {
        let s = shape(2, 3, 9, 4);
        let input: Vec<f64> = (0..s.input_len()).map(|i| i as f64).collect();
        let out = conv1d_forward(&input, &vec![0.0; s.weights_len()], &[1.0, -2.0, 0.5, 3.0], &s)
            .unwrap();
        for b in 0..2 {
            for (oc, &bias) in [1.0, -2.0, 0.5, 3.0].iter().enumerate() {
                for j in 0..s.out_len() {
                    assert_eq!(out[(b * 4 + oc) * s.out_len() + j], bias);
                }
            }
        }
    }

    #[test]
    fn matches_naive_reference_on_random_data() {
        use rand::Rng;
        let mut rng = crate::seed::rng_from(17);
        for &(in_len, in_ch, out_ch, batch) in
            &[(10usize, 2usize, 3usize, 2usize), (11, 1, 4, 1), (64, 3, 5, 3)]
        {
            let s = shape(batch, in_ch, in_len, out_ch);
            let input: Vec<f64> = (0..s.input_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let weights: Vec<f64> =
                (0..s.weights_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bias: Vec<f64> = (0..out_ch).map(|_| rng.gen_range(-1.0..1.0)).collect();

            let got = conv1d_forward(&input, &weights, &bias, &s).unwrap();
            let want = naive_forward(&input, &weights, &bias, &s);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn output_length_is_ceil_of_half() {
        for in_len in 1..50usize {
            let s = shape(1, 1, in_len, 1);
            assert_eq!(s.out_len(), in_len.div_ceil(2));
        }
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let s = shape(1, 1, 8, 1);
        let err = conv1d_forward(&[0.0f32; 7], &[0.0; 3], &[0.0], &s).unwrap_err();
        assert!(matches!(err, NnError::ShapeMismatch { what: "conv input", .. }));
    }
}
