use rand::Rng;

use super::layer::Param;
use super::tensor::{dims4, Real, Tensor};
use crate::error::{Error, Result};

/// Stride, zero padding and channel grouping of a 2-d convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    pub groups: usize,
}

impl Default for ConvGeometry {
    fn default() -> Self {
        Self { stride: (1, 1), padding: (0, 0), groups: 1 }
    }
}

/// `floor((len + 2·pad − kernel)/stride) + 1`, or `None` when the padded
/// input is shorter than the kernel.
pub fn conv_output_dim(len: usize, kernel: usize, pad: usize, stride: usize) -> Option<usize> {
    if stride == 0 || kernel == 0 || len + 2 * pad < kernel {
        return None;
    }
    Some((len + 2 * pad - kernel) / stride + 1)
}

/// Output positions `o` whose tap `o·stride + k − pad` falls inside `[0, len)`.
#[inline]
fn valid_range(k: usize, pad: usize, stride: usize, len: usize, out_len: usize) -> (usize, usize) {
    let lo = if pad > k { (pad - k).div_ceil(stride) } else { 0 };
    if len + pad <= k {
        return (0, 0);
    }
    let hi = ((len - 1 + pad - k) / stride + 1).min(out_len);
    (lo.min(hi), hi)
}

/// Dot product over eight independent accumulators so the loop vectorizes.
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().copied().sum::<T>() + tail
}

struct Dims {
    n: usize,
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    cin_g: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
}

fn check_dims(input: &[usize], weight: &[usize], geo: &ConvGeometry) -> Result<Dims> {
    let (n, cin, h, w) = dims4(input, "conv2d input")?;
    let (cout, cin_g, kh, kw) = dims4(weight, "conv2d weight")?;
    let g = geo.groups;
    if g == 0 || cin % g != 0 || cout % g != 0 {
        return Err(Error::shape(format!(
            "conv2d groups {g} must divide in_channels {cin} and out_channels {cout}"
        )));
    }
    if cin_g != cin / g {
        return Err(Error::shape(format!(
            "conv2d weight expects {} input channels per group, input has {}",
            cin_g,
            cin / g
        )));
    }
    let oh = conv_output_dim(h, kh, geo.padding.0, geo.stride.0);
    let ow = conv_output_dim(w, kw, geo.padding.1, geo.stride.1);
    match (oh, ow) {
        (Some(oh), Some(ow)) => Ok(Dims { n, cin, h, w, cout, cin_g, kh, kw, oh, ow }),
        _ => Err(Error::shape(format!(
            "conv2d kernel ({kh},{kw}) larger than padded input ({},{})",
            h + 2 * geo.padding.0,
            w + 2 * geo.padding.1
        ))),
    }
}

/// Grouped 2-d cross-correlation with zero padding.
pub fn conv2d<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    geo: &ConvGeometry,
) -> Result<Tensor<T>> {
    let d = check_dims(input.shape(), weight.shape(), geo)?;
    if let Some(b) = bias {
        if b.shape() != [d.cout] {
            return Err(Error::shape(format!("conv2d bias shape {:?}, expected [{}]", b.shape(), d.cout)));
        }
    }
    let (sh, sw) = geo.stride;
    let (ph, pw) = geo.padding;
    let cout_g = d.cout / geo.groups;
    let x = input.data();
    let wt = weight.data();
    let plane_out = d.oh * d.ow;
    let mut out = vec![T::zero(); d.n * d.cout * plane_out];

    for b in 0..d.n {
        for oc in 0..d.cout {
            let g = oc / cout_g;
            let out_plane = &mut out[(b * d.cout + oc) * plane_out..][..plane_out];
            if let Some(bias) = bias {
                let bv = bias.data()[oc];
                out_plane.iter_mut().for_each(|v| *v = bv);
            }
            for icg in 0..d.cin_g {
                let ic = g * d.cin_g + icg;
                let in_plane = &x[(b * d.cin + ic) * d.h * d.w..][..d.h * d.w];
                let wk = &wt[(oc * d.cin_g + icg) * d.kh * d.kw..][..d.kh * d.kw];
                for ky in 0..d.kh {
                    let (oy_lo, oy_hi) = valid_range(ky, ph, sh, d.h, d.oh);
                    for oy in oy_lo..oy_hi {
                        let iy = oy * sh + ky - ph;
                        let in_row = &in_plane[iy * d.w..][..d.w];
                        let out_row = &mut out_plane[oy * d.ow..][..d.ow];
                        for kx in 0..d.kw {
                            let wv = wk[ky * d.kw + kx];
                            let (lo, hi) = valid_range(kx, pw, sw, d.w, d.ow);
                            if lo >= hi {
                                continue;
                            }
                            if sw == 1 {
                                let off = lo + kx - pw;
                                for (o, &i) in out_row[lo..hi].iter_mut().zip(&in_row[off..off + hi - lo]) {
                                    *o += wv * i;
                                }
                            } else {
                                for ox in lo..hi {
                                    out_row[ox] += wv * in_row[ox * sw + kx - pw];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(&[d.n, d.cout, d.oh, d.ow], out)
}

#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Option<Tensor<T>>,
    pub weight: Tensor<T>,
    pub bias: Option<Tensor<T>>,
}

/// Gradients of [`conv2d`] with respect to input, weight and bias.
pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
    geo: &ConvGeometry,
    with_bias: bool,
    need_input_grad: bool,
) -> Result<ConvGrads<T>> {
    let d = check_dims(input.shape(), weight.shape(), geo)?;
    if grad_out.shape() != [d.n, d.cout, d.oh, d.ow] {
        return Err(Error::shape(format!(
            "conv2d grad_out shape {:?}, expected {:?}",
            grad_out.shape(),
            [d.n, d.cout, d.oh, d.ow]
        )));
    }
    let (sh, sw) = geo.stride;
    let (ph, pw) = geo.padding;
    let cout_g = d.cout / geo.groups;
    let x = input.data();
    let wt = weight.data();
    let gy = grad_out.data();
    let plane_out = d.oh * d.ow;
    let mut gw = vec![T::zero(); wt.len()];
    let mut gx = if need_input_grad { vec![T::zero(); x.len()] } else { Vec::new() };
    let mut gb = vec![T::zero(); if with_bias { d.cout } else { 0 }];

    for b in 0..d.n {
        for oc in 0..d.cout {
            let g = oc / cout_g;
            let gy_plane = &gy[(b * d.cout + oc) * plane_out..][..plane_out];
            if with_bias {
                gb[oc] += gy_plane.iter().copied().sum::<T>();
            }
            for icg in 0..d.cin_g {
                let ic = g * d.cin_g + icg;
                let base_in = (b * d.cin + ic) * d.h * d.w;
                let in_plane = &x[base_in..][..d.h * d.w];
                let wbase = (oc * d.cin_g + icg) * d.kh * d.kw;
                for ky in 0..d.kh {
                    let (oy_lo, oy_hi) = valid_range(ky, ph, sh, d.h, d.oh);
                    for oy in oy_lo..oy_hi {
                        let iy = oy * sh + ky - ph;
                        let in_row = &in_plane[iy * d.w..][..d.w];
                        let gy_row = &gy_plane[oy * d.ow..][..d.ow];
                        for kx in 0..d.kw {
                            let (lo, hi) = valid_range(kx, pw, sw, d.w, d.ow);
                            if lo >= hi {
                                continue;
                            }
                            let widx = wbase + ky * d.kw + kx;
                            if sw == 1 {
                                let off = lo + kx - pw;
                                let xs = &in_row[off..off + hi - lo];
                                let gs = &gy_row[lo..hi];
                                gw[widx] += dot(gs, xs);
                                if need_input_grad {
                                    let wv = wt[widx];
                                    let gx_row = &mut gx[base_in + iy * d.w..][..d.w];
                                    for (o, &gv) in gx_row[off..off + hi - lo].iter_mut().zip(gs) {
                                        *o += wv * gv;
                                    }
                                }
                            } else {
                                let mut acc = T::zero();
                                for ox in lo..hi {
                                    acc += gy_row[ox] * in_row[ox * sw + kx - pw];
                                }
                                gw[widx] += acc;
                                if need_input_grad {
                                    let wv = wt[widx];
                                    let gx_row = &mut gx[base_in + iy * d.w..][..d.w];
                                    for ox in lo..hi {
                                        gx_row[ox * sw + kx - pw] += wv * gy_row[ox];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: if need_input_grad { Some(Tensor::from_vec(input.shape(), gx)?) } else { None },
        weight: Tensor::from_vec(weight.shape(), gw)?,
        bias: if with_bias { Some(Tensor::from_vec(&[d.cout], gb)?) } else { None },
    })
}

/// Convolution layer with cached input for the backward pass.
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub geometry: ConvGeometry,
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    cache: Option<Tensor<T>>,
}

impl<T: Real> Conv2d<T> {
    /// Glorot-uniform initialized convolution. Bias starts at zero.
    pub fn new<R: Rng + ?Sized>(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        geometry: ConvGeometry,
        bias: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let g = geometry.groups;
        if g == 0 || !in_channels.is_multiple_of(g) || !out_channels.is_multiple_of(g) {
            return Err(Error::shape(format!(
                "groups {g} must divide in_channels {in_channels} and out_channels {out_channels}"
            )));
        }
        let receptive = kernel.0 * kernel.1;
        let fan_in = in_channels / g * receptive;
        let fan_out = out_channels / g * receptive;
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let shape = [out_channels, in_channels / g, kernel.0, kernel.1];
        let n: usize = shape.iter().product();
        let w = (0..n).map(|_| T::of(rng.random_range(-limit..limit))).collect();
        Ok(Self {
            in_channels,
            out_channels,
            kernel,
            geometry,
            weight: Param::new(Tensor::from_vec(&shape, w)?),
            bias: bias.then(|| Param::new(Tensor::zeros(&[out_channels]))),
            cache: None,
        })
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let (n, c, h, w) = dims4(input, "conv2d input")?;
        if c != self.in_channels {
            return Err(Error::shape(format!("conv2d expects {} input channels, got {c}", self.in_channels)));
        }
        let oh = conv_output_dim(h, self.kernel.0, self.geometry.padding.0, self.geometry.stride.0);
        let ow = conv_output_dim(w, self.kernel.1, self.geometry.padding.1, self.geometry.stride.1);
        match (oh, ow) {
            (Some(oh), Some(ow)) => Ok(vec![n, self.out_channels, oh, ow]),
            _ => Err(Error::shape(format!("conv2d kernel {:?} larger than padded input ({h},{w})", self.kernel))),
        }
    }

    pub fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let out = conv2d(input, &self.weight.value, self.bias.as_ref().map(|b| &b.value), &self.geometry)?;
        self.cache = Some(input.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let input = self.cache.as_ref().ok_or_else(|| Error::shape("conv2d backward before forward"))?;
        let g = conv2d_backward(
            input,
            &self.weight.value,
            grad_out,
            &self.geometry,
            self.bias.is_some(),
            need_input_grad,
        )?;
        self.weight.accumulate(&g.weight);
        if let (Some(b), Some(gb)) = (self.bias.as_mut(), g.bias.as_ref()) {
            b.accumulate(gb);
        }
        Ok(g.input)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }
}
