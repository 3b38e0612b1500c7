use std::fmt;

use rand::RngCore;

use super::activation::Activation;
use super::batchnorm::BatchNorm2d;
use super::conv::Conv2d;
use super::dense::Dense;
use super::dropout::Dropout;
use super::pool::Pool2d;
use super::tensor::{Real, Tensor};
use super::Mode;
use crate::error::{Error, Result};

/// A trainable tensor together with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Real> Param<T> {
    pub fn new(value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { value, grad }
    }

    pub fn accumulate(&mut self, g: &Tensor<T>) {
        debug_assert_eq!(g.shape(), self.grad.shape());
        for (a, &b) in self.grad.data_mut().iter_mut().zip(g.data()) {
            *a += b;
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// Reshapes `(N, ...)` to `(N, prod(...))`.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    cached_shape: Option<Vec<usize>>,
}

impl Flatten {
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match input.split_first() {
            Some((&n, rest)) => Ok(vec![n, rest.iter().product()]),
            None => Err(Error::shape("flatten needs a batch dimension")),
        }
    }

    pub fn forward<T: Real>(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self.output_shape(input.shape())?;
        self.cached_shape = Some(input.shape().to_vec());
        input.clone().reshape(&shape)
    }

    pub fn backward<T: Real>(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self.cached_shape.as_ref().ok_or_else(|| Error::shape("flatten backward before forward"))?;
        grad_out.clone().reshape(shape)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv2d,
    BatchNorm2d,
    Activation,
    Pool2d,
    Dropout,
    Dense,
    Flatten,
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LayerKind::Conv2d => "conv2d",
            LayerKind::BatchNorm2d => "batchnorm2d",
            LayerKind::Activation => "activation",
            LayerKind::Pool2d => "pool2d",
            LayerKind::Dropout => "dropout",
            LayerKind::Dense => "dense",
            LayerKind::Flatten => "flatten",
        };
        f.write_str(s)
    }
}

/// One element of a sequential model.
#[derive(Debug, Clone)]
pub enum Layer<T> {
    Conv2d(Conv2d<T>),
    BatchNorm2d(BatchNorm2d<T>),
    Activation(Activation<T>),
    Pool2d(Pool2d),
    Dropout(Dropout<T>),
    Dense(Dense<T>),
    Flatten(Flatten),
}

impl<T: Real> Layer<T> {
    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Conv2d(_) => LayerKind::Conv2d,
            Layer::BatchNorm2d(_) => LayerKind::BatchNorm2d,
            Layer::Activation(_) => LayerKind::Activation,
            Layer::Pool2d(_) => LayerKind::Pool2d,
            Layer::Dropout(_) => LayerKind::Dropout,
            Layer::Dense(_) => LayerKind::Dense,
            Layer::Flatten(_) => LayerKind::Flatten,
        }
    }

    /// Shape propagation without touching any values.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Conv2d(l) => l.output_shape(input),
            Layer::BatchNorm2d(l) => l.output_shape(input),
            Layer::Activation(_) | Layer::Dropout(_) => Ok(input.to_vec()),
            Layer::Pool2d(l) => l.output_shape(input),
            Layer::Dense(l) => l.output_shape(input),
            Layer::Flatten(l) => l.output_shape(input),
        }
    }

    pub fn forward(&mut self, input: &Tensor<T>, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor<T>> {
        match self {
            Layer::Conv2d(l) => l.forward(input),
            Layer::BatchNorm2d(l) => l.forward(input, mode),
            Layer::Activation(l) => l.forward(input),
            Layer::Pool2d(l) => l.forward(input),
            Layer::Dropout(l) => l.forward(input, mode, rng),
            Layer::Dense(l) => l.forward(input),
            Layer::Flatten(l) => l.forward(input),
        }
    }

    /// Accumulates parameter gradients and returns the input gradient when
    /// requested. Layers without parameters always return it.
    pub fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        match self {
            Layer::Conv2d(l) => l.backward(grad_out, need_input_grad),
            Layer::BatchNorm2d(l) => l.backward(grad_out).map(Some),
            Layer::Activation(l) => l.backward(grad_out).map(Some),
            Layer::Pool2d(l) => l.backward(grad_out).map(Some),
            Layer::Dropout(l) => l.backward(grad_out).map(Some),
            Layer::Dense(l) => l.backward(grad_out, need_input_grad),
            Layer::Flatten(l) => l.backward(grad_out).map(Some),
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        match self {
            Layer::Conv2d(l) => std::iter::once(&l.weight).chain(l.bias.as_ref()).collect(),
            Layer::BatchNorm2d(l) => vec![&l.gamma, &l.beta],
            Layer::Dense(l) => std::iter::once(&l.weight).chain(l.bias.as_ref()).collect(),
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        match self {
            Layer::Conv2d(l) => std::iter::once(&mut l.weight).chain(l.bias.as_mut()).collect(),
            Layer::BatchNorm2d(l) => vec![&mut l.gamma, &mut l.beta],
            Layer::Dense(l) => std::iter::once(&mut l.weight).chain(l.bias.as_mut()).collect(),
            _ => Vec::new(),
        }
    }

    /// Non-trainable state that still belongs to a checkpoint.
    pub fn buffers(&self) -> Vec<&Tensor<T>> {
        match self {
            Layer::BatchNorm2d(l) => vec![&l.running_mean, &l.running_var],
            _ => Vec::new(),
        }
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Layer::BatchNorm2d(l) => vec![&mut l.running_mean, &mut l.running_var],
            _ => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }
}
