//! 1D batch normalization over (batch, position) per channel.
//!
//! Applied after the activation in this architecture. Train mode normalizes
//! with batch statistics and reports them so the model can update running
//! stats; eval mode uses the running stats and touches nothing.

use rayon::prelude::*;

use super::{cast, NnError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BnShape {
    pub batch: usize,
    pub channels: usize,
    pub len: usize,
}

impl BnShape {
    pub fn total(&self) -> usize {
        self.batch * self.channels * self.len
    }

    /// Values per channel that the statistics run over.
    pub fn per_channel(&self) -> usize {
        self.batch * self.len
    }

    fn validate(&self, x: usize, gamma: usize, beta: usize) -> Result<(), NnError> {
        if x != self.total() {
            return Err(NnError::ShapeMismatch {
                what: "batchnorm input",
                expected: self.total(),
                actual: x,
            });
        }
        if gamma != self.channels || beta != self.channels {
            return Err(NnError::ShapeMismatch {
                what: "batchnorm parameters",
                expected: self.channels,
                actual: gamma,
            });
        }
        Ok(())
    }
}

/// Train-mode output: normalized values plus the batch statistics needed
/// for the backward pass and the running-stat update.
#[derive(Debug, Clone)]
pub struct BnTrainOutput<T> {
    pub y: Vec<T>,
    pub x_hat: Vec<T>,
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

/// Iterates a channel's slices across the batch.
#[inline]
fn channel_slices<'a, T>(x: &'a [T], shape: &BnShape, c: usize) -> impl Iterator<Item = &'a [T]> {
    let (ch, len) = (shape.channels, shape.len);
    (0..shape.batch).map(move |b| &x[(b * ch + c) * len..(b * ch + c + 1) * len])
}

/// Train-mode forward. Normalizes each channel with its batch mean and
/// (population) variance; statistics accumulate in f64 regardless of `T`.
pub fn bn_forward_train<T: Scalar>(
    x: &[T],
    gamma: &[T],
    beta: &[T],
    shape: &BnShape,
    eps: f64,
) -> Result<BnTrainOutput<T>, NnError> {
    shape.validate(x.len(), gamma.len(), beta.len())?;
    let n = shape.per_channel();
    if n < 2 {
        return Err(NnError::DegenerateBatch(n));
    }

    let mut y = vec![T::zero(); x.len()];
    let mut x_hat = vec![T::zero(); x.len()];
    let mut mean = vec![T::zero(); shape.channels];
    let mut var = vec![T::zero(); shape.channels];

    let len = shape.len;
    let ch = shape.channels;
    // One task per channel; each reduces its own elements in batch order.
    (&mut mean, &mut var)
        .into_par_iter()
        .enumerate()
        .for_each(|(c, (mean_c, var_c))| {
            let mut sum = 0.0f64;
            for slice in channel_slices(x, shape, c) {
                for &v in slice {
                    sum += v.to_f64().unwrap();
                }
            }
            let mu = sum / n as f64;
            let mut sq = 0.0f64;
            for slice in channel_slices(x, shape, c) {
                for &v in slice {
                    let d = v.to_f64().unwrap() - mu;
                    sq += d * d;
                }
            }
            *mean_c = cast(mu);
            *var_c = cast(sq / n as f64);
        });

    y.par_chunks_mut(len)
        .zip(x_hat.par_chunks_mut(len))
        .enumerate()
        .for_each(|(row, (y_row, xh_row))| {
            let c = row % ch;
            let mu = mean[c];
            let istd: T = cast(1.0 / (var[c].to_f64().unwrap() + eps).sqrt());
            let x_row = &x[row * len..(row + 1) * len];
            for i in 0..len {
                let xh = (x_row[i] - mu) * istd;
                xh_row[i] = xh;
                y_row[i] = gamma[c] * xh + beta[c];
            }
        });

    Ok(BnTrainOutput { y, x_hat, mean, var })
}

/// Eval-mode forward using running statistics. Pure.
pub fn bn_forward_eval<T: Scalar>(
    x: &[T],
    gamma: &[T],
    beta: &[T],
    running_mean: &[T],
    running_var: &[T],
    shape: &BnShape,
    eps: f64,
) -> Result<Vec<T>, NnError> {
    shape.validate(x.len(), gamma.len(), beta.len())?;
    let len = shape.len;
    let ch = shape.channels;
    let mut y = vec![T::zero(); x.len()];
    y.par_chunks_mut(len).enumerate().for_each(|(row, y_row)| {
        let c = row % ch;
        let istd: T = cast(1.0 / (running_var[c].to_f64().unwrap() + eps).sqrt());
        let x_row = &x[row * len..(row + 1) * len];
        for i in 0..len {
            y_row[i] = gamma[c] * (x_row[i] - running_mean[c]) * istd + beta[c];
        }
    });
    Ok(y)
}

/// Train-mode backward.
///
/// With `N` values per channel and `istd = 1/sqrt(var + eps)`:
/// `d_beta = sum(d_y)`, `d_gamma = sum(d_y * x_hat)`,
/// `d_x = gamma * istd / N * (N * d_y - d_beta - x_hat * d_gamma)`.
pub fn bn_backward<T: Scalar>(
    d_y: &[T],
    x_hat: &[T],
    var: &[T],
    gamma: &[T],
    shape: &BnShape,
    eps: f64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>), NnError> {
    shape.validate(d_y.len(), gamma.len(), gamma.len())?;
    let n = shape.per_channel();
    let len = shape.len;
    let ch = shape.channels;

    let mut d_gamma = vec![T::zero(); ch];
    let mut d_beta = vec![T::zero(); ch];
    (&mut d_gamma, &mut d_beta)
        .into_par_iter()
        .enumerate()
        .for_each(|(c, (dg, db))| {
            let mut sum_dy = 0.0f64;
            let mut sum_dy_xhat = 0.0f64;
            for (g_slice, xh_slice) in
                channel_slices(d_y, shape, c).zip(channel_slices(x_hat, shape, c))
            {
                for (g, xh) in g_slice.iter().zip(xh_slice) {
                    let gf = g.to_f64().unwrap();
                    sum_dy += gf;
                    sum_dy_xhat += gf * xh.to_f64().unwrap();
                }
            }
            *dg = cast(sum_dy_xhat);
            *db = cast(sum_dy);
        });

    let mut d_x = vec![T::zero(); d_y.len()];
    d_x.par_chunks_mut(len).enumerate().for_each(|(row, dx_row)| {
        let c = row % ch;
        let istd: T = cast(1.0 / (var[c].to_f64().unwrap() + eps).sqrt());
        let scale = gamma[c] * istd / cast(n as f64);
        let n_t: T = cast(n as f64);
        let dy_row = &d_y[row * len..(row + 1) * len];
        let xh_row = &x_hat[row * len..(row + 1) * len];
        for i in 0..len {
            dx_row[i] = scale * (n_t * dy_row[i] - d_beta[c] - xh_row[i] * d_gamma[c]);
        }
    });

    Ok((d_x, d_gamma, d_beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rand_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }

    #[test]
    fn train_mode_normalizes_each_channel() {
        let shape = BnShape { batch: 4, channels: 3, len: 16 };
        let mut rng = crate::seed::rng_from(2);
        let x = rand_vec(&mut rng, shape.total());
        let out = bn_forward_train(&x, &[1.0; 3], &[0.0; 3], &shape, 1e-5).unwrap();

        for c in 0..3 {
            let mut vals = Vec::new();
            for slice in channel_slices(&out.y, &shape, c) {
                vals.extend_from_slice(slice);
            }
            let n = vals.len() as f64;
            let mean: f64 = vals.iter().sum::<f64>() / n;
            let var: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-4, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-3, "var {var}");
        }
    }

    #[test]
    fn gamma_beta_shift_the_statistics() {
        let shape = BnShape { batch: 2, channels: 1, len: 32 };
        let mut rng = crate::seed::rng_from(3);
        let x = rand_vec(&mut rng, shape.total());
        let out = bn_forward_train(&x, &[2.0], &[5.0], &shape, 1e-5).unwrap();
        let n = out.y.len() as f64;
        let mean: f64 = out.y.iter().sum::<f64>() / n;
        let var: f64 = out.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - 5.0).abs() < 1e-4);
        assert!((var - 4.0).abs() < 1e-3);
    }

    #[test]
    fn eval_with_identity_stats_is_affine() {
        let shape = BnShape { batch: 1, channels: 2, len: 4 };
        let x: Vec<f64> = vec![1.0, -2.0, 3.0, 0.5, 2.0, 0.0, -1.0, 4.0];
        let y = bn_forward_eval(
            &x,
            &[3.0, 0.5],
            &[1.0, -1.0],
            &[0.0, 0.0],
            &[1.0, 1.0],
            &shape,
            1e-5,
        )
        .unwrap();
        for (row, (&xi, &yi)) in x.iter().zip(&y).enumerate() {
            let c = (row / 4) % 2;
            let (g, b) = if c == 0 { (3.0, 1.0) } else { (0.5, -1.0) };
            assert!((yi - (g * xi + b)).abs() < 1e-4, "{yi} vs {}", g * xi + b);
        }
    }

    #[test]
    fn degenerate_batch_is_rejected() {
        let shape = BnShape { batch: 1, channels: 2, len: 1 };
        let err = bn_forward_train(&[1.0f64, 2.0], &[1.0; 2], &[0.0; 2], &shape, 1e-5).unwrap_err();
        assert!(matches!(err, NnError::DegenerateBatch(1)));
    }

    /// Finite-difference check of all gradients on a 2x3x5 input.
    /// Loss is a fixed random linear functional of the output.
    #[test]
    fn backward_matches_finite_differences() {
        let shape = BnShape { batch: 2, channels: 3, len: 5 };
        let eps = 1e-5;
        let mut rng = crate::seed::rng_from(4);
        let x = rand_vec(&mut rng, shape.total());
        let gamma = rand_vec(&mut rng, 3);
        let beta = rand_vec(&mut rng, 3);
        let coeffs = rand_vec(&mut rng, shape.total());

        let loss = |x: &[f64], gamma: &[f64], beta: &[f64]| -> f64 {
            let out = bn_forward_train(x, gamma, beta, &shape, eps).unwrap();
            out.y.iter().zip(&coeffs).map(|(y, c)| y * c).sum()
        };

        let out = bn_forward_train(&x, &gamma, &beta, &shape, eps).unwrap();
        let (d_x, d_gamma, d_beta) =
            bn_backward(&coeffs, &out.x_hat, &out.var, &gamma, &shape, eps).unwrap();

        let h = 1e-5;
        let check = |analytic: f64, numeric: f64| {
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(
                ((analytic - numeric) / denom).abs() < 1e-4,
                "analytic {analytic} vs numeric {numeric}"
            );
        };

        for i in (0..x.len()).step_by(7) {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            check(d_x[i], (loss(&xp, &gamma, &beta) - loss(&xm, &gamma, &beta)) / (2.0 * h));
        }
        for c in 0..3 {
            let mut gp = gamma.clone();
            let mut gm = gamma.clone();
            gp[c] += h;
            gm[c] -= h;
            check(d_gamma[c], (loss(&x, &gp, &beta) - loss(&x, &gm, &beta)) / (2.0 * h));

            let mut bp = beta.clone();
            let mut bm = beta.clone();
            bp[c] += h;
            bm[c] -= h;
            check(d_beta[c], (loss(&x, &gamma, &bp) - loss(&x, &gamma, &bm)) / (2.0 * h));
        }
    }
}
