//! Per-channel affine layer with data-dependent initialization.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

use super::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct ActNorm<T> {
    pub log_scale: Array1<T>,
    pub bias: Array1<T>,
    pub initialized: bool,
}

#[derive(Debug, Clone)]
pub struct ActNormGrads<T> {
    pub log_scale: Array1<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> ActNorm<T> {
    /// Identity transform; `initialized` stays false until the data pass.
    pub fn identity(channels: usize) -> Self {
        ActNorm {
            log_scale: Array1::zeros(channels),
            bias: Array1::zeros(channels),
            initialized: false,
        }
    }

    pub fn channels(&self) -> usize {
        self.log_scale.len()
    }

    /// Set scale/bias so the given activations come out with per-channel
    /// mean 0 and variance 1. `batch` items are `[C × T]` grids.
    pub fn init_from_batch(&mut self, batch: &[Array2<T>]) -> Result<()> {
        let c = self.channels();
        let mut count = 0usize;
        let mut mean = vec![0.0f64; c];
        for item in batch {
            if item.nrows() != c {
                return Err(Error::Shape(format!(
                    "actnorm init expects {c} channels, got {}",
                    item.nrows()
                )));
            }
            count += item.ncols();
            for (ch, row) in item.rows().into_iter().enumerate() {
                mean[ch] += row.iter().map(|v| v.to_f64()).sum::<f64>();
            }
        }
        if count == 0 {
            return Err(Error::Dataset("actnorm init on an empty batch".into()));
        }
        for m in mean.iter_mut() {
            *m /= count as f64;
        }
        let mut var = vec![0.0f64; c];
        for item in batch {
            for (ch, row) in item.rows().into_iter().enumerate() {
                var[ch] += row
                    .iter()
                    .map(|v| {
                        let d = v.to_f64() - mean[ch];
                        d * d
                    })
                    .sum::<f64>();
            }
        }
        for ch in 0..c {
            let std = (var[ch] / count as f64).sqrt().max(1e-8);
            self.log_scale[ch] = T::from_f64(-std.ln());
            self.bias[ch] = T::from_f64(-mean[ch]);
        }
        self.initialized = true;
        Ok(())
    }

    fn logdet_normalize(&self, frames: usize) -> T {
        let sum = self.log_scale.iter().fold(T::zero(), |acc, &v| acc + v);
        T::from_f64(frames as f64) * sum
    }

    /// `y = exp(log_scale) ⊙ (x + bias)`, logdet `T · Σ log_scale`.
    pub fn normalize(&self, x: &Array2<T>) -> (Array2<T>, T) {
        let mut y = x.clone();
        for (ch, mut row) in y.rows_mut().into_iter().enumerate() {
            let s = self.log_scale[ch].exp();
            let b = self.bias[ch];
            row.mapv_inplace(|v| s * (v + b));
        }
        (y, self.logdet_normalize(x.ncols()))
    }

    /// Inverse: `x = y ⊙ exp(-log_scale) - bias`, logdet `-T · Σ log_scale`.
    pub fn generate(&self, y: &Array2<T>) -> (Array2<T>, T) {
        let mut x = y.clone();
        for (ch, mut row) in x.rows_mut().into_iter().enumerate() {
            let s = (-self.log_scale[ch]).exp();
            let b = self.bias[ch];
            row.mapv_inplace(|v| v * s - b);
        }
        (x, -self.logdet_normalize(y.ncols()))
    }

    /// Cotangent pullback through [`ActNorm::normalize`]. `y` is the saved
    /// output, `dlogdet` the objective gradient on this layer's logdet.
    pub fn normalize_vjp(
        &self,
        y: &Array2<T>,
        dy: &Array2<T>,
        dlogdet: T,
        grads: &mut ActNormGrads<T>,
    ) -> Array2<T> {
        let frames = T::from_f64(y.ncols() as f64);
        let mut dx = dy.clone();
        for ch in 0..self.channels() {
            let s = self.log_scale[ch].exp();
            let dy_row = dy.row(ch);
            let y_row = y.row(ch);
            let mut acc_b = T::zero();
            let mut acc_ls = T::zero();
            for (&d, &yv) in dy_row.iter().zip(y_row.iter()) {
                acc_b += d * s;
                acc_ls += d * yv;
            }
            grads.bias[ch] += acc_b;
            grads.log_scale[ch] += acc_ls + dlogdet * frames;
            dx.row_mut(ch).mapv_inplace(|v| v * s);
        }
        dx
    }

    /// Cotangent pullback through [`ActNorm::generate`]. `x` is the saved
    /// output of the generate pass.
    pub fn generate_vjp(
        &self,
        x: &Array2<T>,
        dx: &Array2<T>,
        dlogdet: T,
        grads: &mut ActNormGrads<T>,
    ) -> Array2<T> {
        let frames = T::from_f64(x.ncols() as f64);
        let mut dy = dx.clone();
        for ch in 0..self.channels() {
            let s = (-self.log_scale[ch]).exp();
            let b = self.bias[ch];
            let dx_row = dx.row(ch);
            let x_row = x.row(ch);
            let mut acc_b = T::zero();
            let mut acc_ls = T::zero();
            for (&d, &xv) in dx_row.iter().zip(x_row.iter()) {
                acc_b += d;
                acc_ls += d * (xv + b);
            }
            grads.bias[ch] -= acc_b;
            grads.log_scale[ch] += -acc_ls - dlogdet * frames;
            dy.row_mut(ch).mapv_inplace(|v| v * s);
        }
        dy
    }
}

impl<T: Scalar> ActNormGrads<T> {
    pub fn zeros(channels: usize) -> Self {
        ActNormGrads {
            log_scale: Array1::zeros(channels),
            bias: Array1::zeros(channels),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::flow::scalar::standard_normal;

    #[test]
    fn identity_passes_through_with_zero_logdet() {
        let layer = ActNorm::<f64>::identity(3);
        let x = array![[0.5, -0.25], [1.0, 2.0], [0.0, -1.0]];
        let (y, ld) = layer.normalize(&x);
        assert_eq!(y, x);
        assert_eq!(ld, 0.0);
    }

    #[test]
    fn logdet_closed_form() {
        let mut layer = ActNorm::<f64>::identity(2);
        layer.log_scale.fill(2.0f64.ln());
        let x = Array2::<f64>::zeros((2, 3));
        let (_, ld) = layer.normalize(&x);
        assert!((ld - 4.158883).abs() < 1e-6);
        let (_, ld_inv) = layer.generate(&x);
        assert!((ld + ld_inv).abs() < 1e-12);
    }

    #[test]
    fn data_init_normalizes_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let batch: Vec<Array2<f64>> = (0..4)
            .map(|_| {
                Array2::from_shape_fn((3, 50), |(c, _)| {
                    standard_normal::<f64, _>(&mut rng) * (c as f64 + 1.0) + 3.0
                })
            })
            .collect();
        let mut layer = ActNorm::<f64>::identity(3);
        layer.init_from_batch(&batch).unwrap();
        assert!(layer.initialized);
        let normalized: Vec<Array2<f64>> = batch.iter().map(|b| layer.normalize(b).0).collect();
        for ch in 0..3 {
            let vals: Vec<f64> = normalized
                .iter()
                .flat_map(|n| n.row(ch).to_vec())
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-4, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-4, "var {var}");
        }
    }

    #[test]
    fn generate_inverts_normalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut layer = ActNorm::<f64>::identity(4);
        for v in layer.log_scale.iter_mut() {
            *v = standard_normal::<f64, _>(&mut rng) * 0.3;
        }
        for v in layer.bias.iter_mut() {
            *v = standard_normal::<f64, _>(&mut rng);
        }
        let x = Array2::from_shape_fn((4, 7), |_| standard_normal::<f64, _>(&mut rng));
        let (y, ld_f) = layer.normalize(&x);
        let (back, ld_g) = layer.generate(&y);
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((ld_f + ld_g).abs() < 1e-12);
    }
}
