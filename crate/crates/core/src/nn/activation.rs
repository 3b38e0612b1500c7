use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Activation registry keyed by the integer codes used in model specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    /// code −1
    Identity,
    /// code 3, α = 1
    Elu,
    /// code 9, over the last dimension
    LogSoftmax,
}

impl ActivationKind {
    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            -1 => Some(Self::Identity),
            3 => Some(Self::Elu),
            9 => Some(Self::LogSoftmax),
            _ => None,
        }
    }

    pub fn code(self) -> i64 {
        match self {
            Self::Identity => -1,
            Self::Elu => 3,
            Self::LogSoftmax => 9,
        }
    }
}

pub fn activation_forward<T: Real>(input: &Tensor<T>, kind: ActivationKind) -> Result<Tensor<T>> {
    match kind {
        ActivationKind::Identity => Ok(input.clone()),
        ActivationKind::Elu => Ok(input.map(|x| if x >= T::zero() { x } else { x.exp_m1() })),
        ActivationKind::LogSoftmax => {
            let last = *input.shape().last().ok_or_else(|| Error::shape("log-softmax of a scalar"))?;
            if last == 0 {
                return Err(Error::shape("log-softmax over an empty dimension"));
            }
            let mut out = input.clone();
            for row in out.data_mut().chunks_mut(last) {
                let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
                row.iter_mut().for_each(|v| *v -= lse);
            }
            Ok(out)
        }
    }
}

/// Input gradient given the forward *output*.
pub fn activation_backward<T: Real>(output: &Tensor<T>, grad_out: &Tensor<T>, kind: ActivationKind) -> Result<Tensor<T>> {
    if output.shape() != grad_out.shape() {
        return Err(Error::shape("activation grad shape differs from forward output"));
    }
    match kind {
        ActivationKind::Identity => Ok(grad_out.clone()),
        ActivationKind::Elu => {
            let mut g = grad_out.clone();
            for (gv, &y) in g.data_mut().iter_mut().zip(output.data()) {
                if y < T::zero() {
                    *gv *= y + T::one();
                }
            }
            Ok(g)
        }
        ActivationKind::LogSoftmax => {
            let last = *output.shape().last().expect("checked in forward");
            let mut g = grad_out.clone();
            for (grow, yrow) in g.data_mut().chunks_mut(last).zip(output.data().chunks(last)) {
                let s: T = grow.iter().copied().sum();
                for (gv, &y) in grow.iter_mut().zip(yrow) {
                    *gv -= y.exp() * s;
                }
            }
            Ok(g)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Activation<T> {
    pub kind: ActivationKind,
    output: Option<Tensor<T>>,
}

impl<T: Real> Activation<T> {
    pub fn new(kind: ActivationKind) -> Self {
        Self { kind, output: None }
    }

    pub fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let y = activation_forward(input, self.kind)?;
        self.output = Some(y.clone());
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.output.as_ref().ok_or_else(|| Error::shape("activation backward before forward"))?;
        activation_backward(y, grad_out, self.kind)
    }
}
