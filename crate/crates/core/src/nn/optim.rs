use super::layer::Param;
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update of a flat parameter slice. `step` is the
/// 1-based step index after incrementing.
pub fn adam_update<T: Real>(param: &mut [T], grad: &[T], m: &mut [T], v: &mut [T], step: u64, cfg: &AdamConfig) {
    let b1 = T::of(cfg.beta1);
    let b2 = T::of(cfg.beta2);
    let one = T::one();
    let bc1 = T::of(1.0 - cfg.beta1.powf(step as f64));
    let bc2 = T::of(1.0 - cfg.beta2.powf(step as f64));
    let lr = T::of(cfg.lr);
    let eps = T::of(cfg.eps);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (one - b1) * g;
        v[i] = b2 * v[i] + (one - b2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Adam optimizer state: one first/second moment pair per parameter.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, step: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn moments(&self) -> (&[Tensor<T>], &[Tensor<T>]) {
        (&self.m, &self.v)
    }

    /// Applies one update using the gradients stored in `params`.
    pub fn step(&mut self, params: &mut [&mut Param<T>]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::invalid("parameter list changed between optimizer steps"));
        }
        for (i, p) in params.iter().enumerate() {
            if self.m[i].shape() != p.value.shape() {
                return Err(Error::shape(format!("optimizer moment {i} shape differs from its parameter")));
            }
            if let Some(j) = p.grad.data().iter().position(|g| !g.is_finite()) {
                return Err(Error::numeric(format!(
                    "non-finite gradient in parameter {i} at index {j} (step {})",
                    self.step + 1
                )));
            }
        }
        self.step += 1;
        for (i, p) in params.iter_mut().enumerate() {
            let Param { value, grad } = &mut **p;
            adam_update(value.data_mut(), grad.data(), self.m[i].data_mut(), self.v[i].data_mut(), self.step, &self.config);
        }
        Ok(())
    }
}
