use super::layer::Param;
use super::tensor::{dims4, Real, Tensor};
use super::Mode;
use crate::error::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Saved intermediates of a batch-statistics forward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    pub x_hat: Tensor<T>,
    pub inv_std: Vec<T>,
    pub mean: Vec<T>,
    /// Biased batch variance per channel.
    pub var: Vec<T>,
}

/// Per-channel normalization of an `(N, C, H, W)` tensor.
///
/// In [`Mode::Train`] batch statistics are used and a cache is returned; in
/// [`Mode::Eval`] the supplied running statistics are used.
pub fn batchnorm2d_forward<T: Real>(
    input: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running: Option<(&Tensor<T>, &Tensor<T>)>,
    mode: Mode,
    eps: f64,
) -> Result<(Tensor<T>, Option<BatchNormCache<T>>)> {
    let (n, c, h, w) = dims4(input.shape(), "batchnorm2d input")?;
    if gamma.shape() != [c] || beta.shape() != [c] {
        return Err(Error::shape(format!("batchnorm2d affine parameters must have shape [{c}]")));
    }
    let plane = h * w;
    let m = n * plane;
    let x = input.data();
    let eps = T::of(eps);
    let mut out = vec![T::zero(); x.len()];

    match mode {
        Mode::Eval => {
            let (rm, rv) = running.ok_or_else(|| Error::invalid("batchnorm2d eval mode needs running statistics"))?;
            for ch in 0..c {
                let inv = (rv.data()[ch] + eps).sqrt().recip();
                let (g, b, mu) = (gamma.data()[ch], beta.data()[ch], rm.data()[ch]);
                for s in 0..n {
                    let base = (s * c + ch) * plane;
                    for i in base..base + plane {
                        out[i] = g * (x[i] - mu) * inv + b;
                    }
                }
            }
            Ok((Tensor::from_vec(input.shape(), out)?, None))
        }
        Mode::Train => {
            if m < 2 {
                return Err(Error::shape(format!("batchnorm2d in train mode needs N·H·W ≥ 2 per channel, got {m}")));
            }
            let mf = T::of(m as f64);
            let mut x_hat = vec![T::zero(); x.len()];
            let mut means = vec![T::zero(); c];
            let mut vars = vec![T::zero(); c];
            let mut invs = vec![T::zero(); c];
            for ch in 0..c {
                let mut sum = T::zero();
                for s in 0..n {
                    let base = (s * c + ch) * plane;
                    sum += x[base..base + plane].iter().copied().sum::<T>();
                }
                let mu = sum / mf;
                let mut sq = T::zero();
                for s in 0..n {
                    let base = (s * c + ch) * plane;
                    sq += x[base..base + plane].iter().map(|&v| (v - mu) * (v - mu)).sum::<T>();
                }
                let var = sq / mf;
                let inv = (var + eps).sqrt().recip();
                let (g, b) = (gamma.data()[ch], beta.data()[ch]);
                for s in 0..n {
                    let base = (s * c + ch) * plane;
                    for i in base..base + plane {
                        let xh = (x[i] - mu) * inv;
                        x_hat[i] = xh;
                        out[i] = g * xh + b;
                    }
                }
                means[ch] = mu;
                vars[ch] = var;
                invs[ch] = inv;
            }
            let cache = BatchNormCache {
                x_hat: Tensor::from_vec(input.shape(), x_hat)?,
                inv_std: invs,
                mean: means,
                var: vars,
            };
            Ok((Tensor::from_vec(input.shape(), out)?, Some(cache)))
        }
    }
}

/// Returns `(d_input, d_gamma, d_beta)` for a train-mode forward pass.
pub fn batchnorm2d_backward<T: Real>(
    grad_out: &Tensor<T>,
    gamma: &Tensor<T>,
    cache: &BatchNormCache<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, c, h, w) = dims4(grad_out.shape(), "batchnorm2d grad")?;
    if grad_out.shape() != cache.x_hat.shape() {
        return Err(Error::shape("batchnorm2d grad shape differs from cached forward"));
    }
    let plane = h * w;
    let mf = T::of((n * plane) as f64);
    let dy = grad_out.data();
    let xh = cache.x_hat.data();
    let mut dx = vec![T::zero(); dy.len()];
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for ch in 0..c {
        let mut sum_dy = T::zero();
        let mut sum_dy_xh = T::zero();
        for s in 0..n {
            let base = (s * c + ch) * plane;
            for i in base..base + plane {
                sum_dy += dy[i];
                sum_dy_xh += dy[i] * xh[i];
            }
        }
        dgamma[ch] = sum_dy_xh;
        dbeta[ch] = sum_dy;
        let k = gamma.data()[ch] * cache.inv_std[ch] / mf;
        for s in 0..n {
            let base = (s * c + ch) * plane;
            for i in base..base + plane {
                dx[i] = k * (mf * dy[i] - sum_dy - xh[i] * sum_dy_xh);
            }
        }
    }
    Ok((
        Tensor::from_vec(grad_out.shape(), dx)?,
        Tensor::from_vec(&[c], dgamma)?,
        Tensor::from_vec(&[c], dbeta)?,
    ))
}

#[derive(Debug, Clone)]
enum Cached<T> {
    Train(BatchNormCache<T>),
    Eval,
}

#[derive(Debug, Clone)]
pub struct BatchNorm2d<T> {
    pub channels: usize,
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub eps: f64,
    pub momentum: f64,
    cache: Option<Cached<T>>,
}

impl<T: Real> BatchNorm2d<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            gamma: Param::new(Tensor::full(&[channels], T::one())),
            beta: Param::new(Tensor::zeros(&[channels])),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], T::one()),
            eps: BN_EPS,
            momentum: BN_MOMENTUM,
            cache: None,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let (_, c, _, _) = dims4(input, "batchnorm2d input")?;
        if c != self.channels {
            return Err(Error::shape(format!("batchnorm2d expects {} channels, got {c}", self.channels)));
        }
        Ok(input.to_vec())
    }

    pub fn forward(&mut self, input: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        self.output_shape(input.shape())?;
        let (out, cache) = batchnorm2d_forward(
            input,
            &self.gamma.value,
            &self.beta.value,
            Some((&self.running_mean, &self.running_var)),
            mode,
            self.eps,
        )?;
        match cache {
            Some(cache) => {
                let (n, _, h, w) = dims4(input.shape(), "batchnorm2d input")?;
                let m = (n * h * w) as f64;
                let mom = T::of(self.momentum);
                let unbias = T::of(m / (m - 1.0));
                for ch in 0..self.channels {
                    let rm = &mut self.running_mean.data_mut()[ch];
                    *rm = (T::one() - mom) * *rm + mom * cache.mean[ch];
                    let rv = &mut self.running_var.data_mut()[ch];
                    *rv = (T::one() - mom) * *rv + mom * cache.var[ch] * unbias;
                }
                self.cache = Some(Cached::Train(cache));
            }
            None => self.cache = Some(Cached::Eval),
        }
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        match self.cache.as_ref() {
            Some(Cached::Train(cache)) => {
                let (dx, dg, db) = batchnorm2d_backward(grad_out, &self.gamma.value, cache)?;
                self.gamma.accumulate(&dg);
                self.beta.accumulate(&db);
                Ok(dx)
            }
            Some(Cached::Eval) => {
                // Affine map with frozen statistics; parameter grads are not needed in eval.
                let (n, c, h, w) = dims4(grad_out.shape(), "batchnorm2d grad")?;
                let plane = h * w;
                let eps = T::of(self.eps);
                let mut dx = grad_out.clone();
                for s in 0..n {
                    for ch in 0..c {
                        let k = self.gamma.value.data()[ch] * (self.running_var.data()[ch] + eps).sqrt().recip();
                        let base = (s * c + ch) * plane;
                        dx.data_mut()[base..base + plane].iter_mut().for_each(|v| *v *= k);
                    }
                }
                Ok(dx)
            }
            None => Err(Error::shape("batchnorm2d backward before forward")),
        }
    }
}
