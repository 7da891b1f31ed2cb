//! Dense (affine) output head.

use super::{NnError, Scalar};

/// `logits[b][k] = bias[k] + sum_i x[b][i] * w[i][k]`
/// with `w` stored row-major `[in_dim x out_dim]`.
pub fn dense_forward<T: Scalar>(
    x: &[T],
    weights: &[T],
    bias: &[T],
    in_dim: usize,
    out_dim: usize,
) -> Result<Vec<T>, NnError> {
    if weights.len() != in_dim * out_dim {
        return Err(NnError::ShapeMismatch {
            what: "dense weights",
            expected: in_dim * out_dim,
            actual: weights.len(),
        });
    }
    if x.len() % in_dim != 0 {
        return Err(NnError::ShapeMismatch {
            what: "dense input",
            expected: in_dim,
            actual: x.len(),
        });
    }
    let batch = x.len() / in_dim;
    let mut out = vec![T::zero(); batch * out_dim];
    for b in 0..batch {
        let x_row = &x[b * in_dim..(b + 1) * in_dim];
        let out_row = &mut out[b * out_dim..(b + 1) * out_dim];
        out_row.copy_from_slice(bias);
        for (i, &xi) in x_row.iter().enumerate() {
            let w_row = &weights[i * out_dim..(i + 1) * out_dim];
            for (o, &w) in out_row.iter_mut().zip(w_row) {
                *o = *o + xi * w;
            }
        }
    }
    Ok(out)
}

/// Gradients w.r.t. input, weights and bias.
pub fn dense_backward<T: Scalar>(
    x: &[T],
    weights: &[T],
    d_out: &[T],
    in_dim: usize,
    out_dim: usize,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let batch = x.len() / in_dim;
    debug_assert_eq!(d_out.len(), batch * out_dim);

    let mut d_x = vec![T::zero(); x.len()];
    let mut d_w = vec![T::zero(); weights.len()];
    let mut d_b = vec![T::zero(); out_dim];

    for b in 0..batch {
        let x_row = &x[b * in_dim..(b + 1) * in_dim];
        let g_row = &d_out[b * out_dim..(b + 1) * out_dim];
        for (db, &g) in d_b.iter_mut().zip(g_row) {
            *db = *db + g;
        }
        let dx_row = &mut d_x[b * in_dim..(b + 1) * in_dim];
        for i in 0..in_dim {
            let w_row = &weights[i * out_dim..(i + 1) * out_dim];
            let dw_row = &mut d_w[i * out_dim..(i + 1) * out_dim];
            let mut acc = T::zero();
            for k in 0..out_dim {
                acc = acc + w_row[k] * g_row[k];
                dw_row[k] = dw_row[k] + x_row[i] * g_row[k];
            }
            dx_row[i] = acc;
        }
    }
    (d_x, d_w, d_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_and_bias_give_zero_logits() {
        let out = dense_forward(&[1.0f64, 2.0, 3.0], &[0.0; 6], &[0.0; 2], 3, 2).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn one_hot_input_selects_a_weight_row() {
        let w = [1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]; // 3x2
        let out = dense_forward(&[0.0, 1.0, 0.0], &w, &[0.5, -0.5], 3, 2).unwrap();
        assert_eq!(out, vec![3.5, 3.5]);
    }

    #[test]
    fn matches_naive_matmul() {
        use rand::Rng;
        let mut rng = crate::seed::rng_from(6);
        let (batch, in_dim, out_dim) = (4usize, 7usize, 3usize);
        let x: Vec<f64> = (0..batch * in_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..in_dim * out_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bias: Vec<f64> = (0..out_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let got = dense_forward(&x, &w, &bias, in_dim, out_dim).unwrap();
        for b in 0..batch {
            for k in 0..out_dim {
                let mut want = bias[k];
                for i in 0..in_dim {
                    want += x[b * in_dim + i] * w[i * out_dim + k];
                }
                assert!((got[b * out_dim + k] - want).abs() < 1e-12);
            }
        }
    }
}
