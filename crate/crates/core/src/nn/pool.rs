use super::tensor::{dims4, Real, Tensor};
use crate::error::{Error, Result};

/// Pooling registry: code 0 is max, code 1 is average, −1 means absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Average,
}

impl PoolKind {
    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            0 => Some(Self::Max),
            1 => Some(Self::Average),
            _ => None,
        }
    }

    pub fn code(self) -> i64 {
        match self {
            Self::Max => 0,
            Self::Average => 1,
        }
    }
}

fn pooled_dims(input: &[usize], kernel: (usize, usize)) -> Result<(usize, usize, usize, usize, usize, usize)> {
    let (n, c, h, w) = dims4(input, "pool2d input")?;
    let (kh, kw) = kernel;
    if kh == 0 || kw == 0 || kh > h || kw > w {
        return Err(Error::shape(format!("pool2d kernel ({kh},{kw}) larger than input ({h},{w})")));
    }
    Ok((n, c, h, w, h / kh, w / kw))
}

/// Non-overlapping pooling (stride = kernel); trailing rows/columns that do
/// not fill a whole window are dropped. Returns the output and, for max
/// pooling, the flat input index of each selected element.
pub fn pool2d<T: Real>(input: &Tensor<T>, kind: PoolKind, kernel: (usize, usize)) -> Result<(Tensor<T>, Vec<usize>)> {
    let (n, c, h, w, oh, ow) = pooled_dims(input.shape(), kernel)?;
    let (kh, kw) = kernel;
    let x = input.data();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::new();
    let inv = T::of(1.0 / (kh * kw) as f64);
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                match kind {
                    PoolKind::Average => {
                        let mut s = T::zero();
                        for ky in 0..kh {
                            let row = base + (oy * kh + ky) * w + ox * kw;
                            s += x[row..row + kw].iter().copied().sum::<T>();
                        }
                        out.push(s * inv);
                    }
                    PoolKind::Max => {
                        let mut best = base + oy * kh * w + ox * kw;
                        for ky in 0..kh {
                            let row = base + (oy * kh + ky) * w + ox * kw;
                            for i in row..row + kw {
                                if x[i] > x[best] {
                                    best = i;
                                }
                            }
                        }
                        out.push(x[best]);
                        argmax.push(best);
                    }
                }
            }
        }
    }
    Ok((Tensor::from_vec(&[n, c, oh, ow], out)?, argmax))
}

pub fn pool2d_backward<T: Real>(
    input_shape: &[usize],
    grad_out: &Tensor<T>,
    kind: PoolKind,
    kernel: (usize, usize),
    argmax: &[usize],
) -> Result<Tensor<T>> {
    let (n, c, h, w, oh, ow) = pooled_dims(input_shape, kernel)?;
    if grad_out.shape() != [n, c, oh, ow] {
        return Err(Error::shape("pool2d grad shape differs from forward output"));
    }
    let (kh, kw) = kernel;
    let mut gx = Tensor::zeros(input_shape);
    let gxd = gx.data_mut();
    let gy = grad_out.data();
    match kind {
        PoolKind::Max => {
            for (&src, &g) in argmax.iter().zip(gy) {
                gxd[src] += g;
            }
        }
        PoolKind::Average => {
            let inv = T::of(1.0 / (kh * kw) as f64);
            for plane in 0..n * c {
                let base = plane * h * w;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let g = gy[(plane * oh + oy) * ow + ox] * inv;
                        for ky in 0..kh {
                            let row = base + (oy * kh + ky) * w + ox * kw;
                            gxd[row..row + kw].iter_mut().for_each(|v| *v += g);
                        }
                    }
                }
            }
        }
    }
    Ok(gx)
}

#[derive(Debug, Clone)]
pub struct Pool2d {
    pub kind: PoolKind,
    pub kernel: (usize, usize),
    input_shape: Option<Vec<usize>>,
    argmax: Vec<usize>,
}

impl Pool2d {
    pub fn new(kind: PoolKind, kernel: (usize, usize)) -> Self {
        Self { kind, kernel, input_shape: None, argmax: Vec::new() }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let (n, c, _, _, oh, ow) = pooled_dims(input, self.kernel)?;
        Ok(vec![n, c, oh, ow])
    }

    pub fn forward<T: Real>(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let (y, argmax) = pool2d(input, self.kind, self.kernel)?;
        self.input_shape = Some(input.shape().to_vec());
        self.argmax = argmax;
        Ok(y)
    }

    pub fn backward<T: Real>(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self.input_shape.as_ref().ok_or_else(|| Error::shape("pool2d backward before forward"))?;
        pool2d_backward(shape, grad_out, self.kind, self.kernel, &self.argmax)
    }
}
