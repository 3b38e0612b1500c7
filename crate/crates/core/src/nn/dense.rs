use rand::Rng;

use super::layer::Param;
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

fn check<T: Real>(input: &Tensor<T>, weights: &Tensor<T>) -> Result<(usize, usize, usize)> {
    let (n, f) = match *input.shape() {
        [n, f] => (n, f),
        _ => return Err(Error::shape(format!("dense input must be 2-d, got {:?}", input.shape()))),
    };
    match *weights.shape() {
        [wf, k] if wf == f => Ok((n, f, k)),
        _ => Err(Error::shape(format!(
            "dense weights {:?} do not match {f} input features",
            weights.shape()
        ))),
    }
}

/// `x·W + b` with `x: (N, F)`, `W: (F, K)`.
pub fn dense<T: Real>(input: &Tensor<T>, weights: &Tensor<T>, bias: Option<&Tensor<T>>) -> Result<Tensor<T>> {
    let (n, f, k) = check(input, weights)?;
    if let Some(b) = bias {
        if b.shape() != [k] {
            return Err(Error::shape(format!("dense bias shape {:?}, expected [{k}]", b.shape())));
        }
    }
    let x = input.data();
    let w = weights.data();
    let mut out = vec![T::zero(); n * k];
    for (i, orow) in out.chunks_mut(k).enumerate() {
        if let Some(b) = bias {
            orow.copy_from_slice(b.data());
        }
        for (j, &xv) in x[i * f..(i + 1) * f].iter().enumerate() {
            for (o, &wv) in orow.iter_mut().zip(&w[j * k..(j + 1) * k]) {
                *o += xv * wv;
            }
        }
    }
    Tensor::from_vec(&[n, k], out)
}

/// Returns `(d_input, d_weights, d_bias)`.
pub fn dense_backward<T: Real>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, f, k) = check(input, weights)?;
    if grad_out.shape() != [n, k] {
        return Err(Error::shape("dense grad shape differs from forward output"));
    }
    let x = input.data();
    let w = weights.data();
    let gy = grad_out.data();
    let mut gx = vec![T::zero(); n * f];
    let mut gw = vec![T::zero(); f * k];
    let mut gb = vec![T::zero(); k];
    for i in 0..n {
        let grow = &gy[i * k..(i + 1) * k];
        for (b, &g) in gb.iter_mut().zip(grow) {
            *b += g;
        }
        for j in 0..f {
            let xv = x[i * f + j];
            let wrow = &w[j * k..(j + 1) * k];
            let mut acc = T::zero();
            for ((gwv, &wv), &g) in gw[j * k..(j + 1) * k].iter_mut().zip(wrow).zip(grow) {
                *gwv += xv * g;
                acc += wv * g;
            }
            gx[i * f + j] = acc;
        }
    }
    Ok((
        Tensor::from_vec(&[n, f], gx)?,
        Tensor::from_vec(&[f, k], gw)?,
        Tensor::from_vec(&[k], gb)?,
    ))
}

#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub in_features: usize,
    pub out_features: usize,
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    cache: Option<Tensor<T>>,
}

impl<T: Real> Dense<T> {
    pub fn new<R: Rng + ?Sized>(in_features: usize, out_features: usize, bias: bool, rng: &mut R) -> Result<Self> {
        if in_features == 0 || out_features == 0 {
            return Err(Error::shape("dense layer needs positive dimensions"));
        }
        let limit = (6.0 / (in_features + out_features) as f64).sqrt();
        let w = (0..in_features * out_features).map(|_| T::of(rng.random_range(-limit..limit))).collect();
        Ok(Self {
            in_features,
            out_features,
            weight: Param::new(Tensor::from_vec(&[in_features, out_features], w)?),
            bias: bias.then(|| Param::new(Tensor::zeros(&[out_features]))),
            cache: None,
        })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *input {
            [n, f] if f == self.in_features => Ok(vec![n, self.out_features]),
            _ => Err(Error::shape(format!("dense expects (N, {}), got {:?}", self.in_features, input))),
        }
    }

    pub fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let y = dense(input, &self.weight.value, self.bias.as_ref().map(|b| &b.value))?;
        self.cache = Some(input.clone());
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let x = self.cache.as_ref().ok_or_else(|| Error::shape("dense backward before forward"))?;
        let (gx, gw, gb) = dense_backward(x, &self.weight.value, grad_out)?;
        self.weight.accumulate(&gw);
        if let Some(b) = self.bias.as_mut() {
            b.accumulate(&gb);
        }
        Ok(need_input_grad.then_some(gx))
    }
}
