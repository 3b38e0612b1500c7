//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layer::Layer;
use super::model::Model;
use super::tensor::Tensor;
use super::Mode;
use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct GradcheckOptions {
    pub step: f64,
    /// Denominator floor of the relative error, so that entries whose true
    /// gradient is ~0 are compared in absolute terms.
    pub floor: f64,
    /// Check at most this many entries per tensor (seeded sample); `None`
    /// checks every entry.
    pub max_entries: Option<usize>,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self { step: 1e-3, floor: 1e-6, max_entries: None, mode: Mode::Train, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub tensors: Vec<TensorCheck>,
}

impl GradcheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max)
    }

    pub fn checked(&self) -> usize {
        self.tensors.iter().map(|t| t.checked).sum()
    }
}

fn rel_error(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

fn projection(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("sized from shape")
}

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn entries(len: usize, opts: &GradcheckOptions, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match opts.max_entries {
        Some(k) if k < len => {
            let mut v = sample(rng, len, k).into_vec();
            v.sort_unstable();
            v
        }
        _ => (0..len).collect(),
    }
}

/// A differentiable thing with addressable parameters.
trait Probe {
    fn run(&mut self, x: &Tensor<f64>) -> Result<Tensor<f64>>;
    fn grads(&mut self, x: &Tensor<f64>, r: &Tensor<f64>) -> Result<(Tensor<f64>, Vec<Tensor<f64>>)>;
    fn param_count(&self) -> usize;
    fn param(&mut self, i: usize) -> &mut Tensor<f64>;
}

struct LayerProbe<'a> {
    layer: &'a mut Layer<f64>,
    mode: Mode,
    rng: ChaCha8Rng,
}

impl Probe for LayerProbe<'_> {
    fn run(&mut self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        self.layer.forward(x, self.mode, &mut self.rng)
    }

    fn grads(&mut self, x: &Tensor<f64>, r: &Tensor<f64>) -> Result<(Tensor<f64>, Vec<Tensor<f64>>)> {
        for p in self.layer.params_mut() {
            p.zero_grad();
        }
        self.run(x)?;
        let gx = self.layer.backward(r, true)?.expect("input gradient requested");
        Ok((gx, self.layer.params().iter().map(|p| p.grad.clone()).collect()))
    }

    fn param_count(&self) -> usize {
        self.layer.params().len()
    }

    fn param(&mut self, i: usize) -> &mut Tensor<f64> {
        &mut self.layer.params_mut().into_iter().nth(i).expect("index in range").value
    }
}

struct ModelProbe<'a> {
    model: &'a mut Model<f64>,
}

impl Probe for ModelProbe<'_> {
    fn run(&mut self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        self.model.forward(x)
    }

    fn grads(&mut self, x: &Tensor<f64>, r: &Tensor<f64>) -> Result<(Tensor<f64>, Vec<Tensor<f64>>)> {
        self.model.zero_grad();
        self.model.forward(x)?;
        let gx = self.model.backward(r, true)?.expect("input gradient requested");
        let gx = gx.reshape(x.shape())?;
        Ok((gx, self.model.params().iter().map(|p| p.grad.clone()).collect()))
    }

    fn param_count(&self) -> usize {
        self.model.params().len()
    }

    fn param(&mut self, i: usize) -> &mut Tensor<f64> {
        &mut self.model.params_mut().into_iter().nth(i).expect("index in range").value
    }
}

fn check(probe: &mut dyn Probe, input: &Tensor<f64>, opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let out = probe.run(input)?;
    let r = projection(out.shape(), &mut rng);
    let (gx, gparams) = probe.grads(input, &r)?;
    let h = opts.step;
    let mut tensors = Vec::new();

    let mut x = input.clone();
    let mut worst = 0.0f64;
    let idx = entries(x.len(), opts, &mut rng);
    for &i in &idx {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + h;
        let up = dot(&probe.run(&x)?, &r);
        x.data_mut()[i] = orig - h;
        let down = dot(&probe.run(&x)?, &r);
        x.data_mut()[i] = orig;
        worst = worst.max(rel_error(gx.data()[i], (up - down) / (2.0 * h), opts.floor));
    }
    tensors.push(TensorCheck { name: "input".into(), checked: idx.len(), max_rel_error: worst });

    for (p, g) in gparams.iter().enumerate().take(probe.param_count()) {
        let len = g.len();
        let idx = entries(len, opts, &mut rng);
        let mut worst = 0.0f64;
        for &i in &idx {
            let orig = probe.param(p).data()[i];
            probe.param(p).data_mut()[i] = orig + h;
            let up = dot(&probe.run(input)?, &r);
            probe.param(p).data_mut()[i] = orig - h;
            let down = dot(&probe.run(input)?, &r);
            probe.param(p).data_mut()[i] = orig;
            worst = worst.max(rel_error(g.data()[i], (up - down) / (2.0 * h), opts.floor));
        }
        tensors.push(TensorCheck { name: format!("param{p}"), checked: idx.len(), max_rel_error: worst });
    }
    Ok(GradcheckReport { tensors })
}

/// Checks a single layer against the scalar `Σ r ⊙ layer(x)` for a seeded
/// random projection `r`. Dropout masks are held fixed.
pub fn gradcheck_layer(layer: &mut Layer<f64>, input: &Tensor<f64>, opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let frozen = matches!(layer, Layer::Dropout(_));
    let mut probe = LayerProbe { layer, mode: opts.mode, rng: ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed) };
    probe.run(input)?;
    if let (true, Layer::Dropout(d)) = (frozen, &mut *probe.layer) {
        d.frozen = true;
    }
    let report = check(&mut probe, input, opts);
    if let Layer::Dropout(d) = probe.layer {
        d.frozen = false;
    }
    report
}

/// Whole-model variant of [`gradcheck_layer`]. Model parameters and running
/// statistics are restored afterwards.
pub fn gradcheck_model(model: &mut Model<f64>, input: &Tensor<f64>, opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let snap = model.snapshot();
    let mode = model.mode;
    model.set_mode(opts.mode);
    model.forward(input)?;
    model.freeze_dropout(true);
    let report = check(&mut ModelProbe { model: &mut *model }, input, opts);
    model.freeze_dropout(false);
    model.set_mode(mode);
    model.restore(&snap)?;
    report
}
