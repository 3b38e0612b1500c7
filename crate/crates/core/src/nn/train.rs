use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::nll_loss;
use super::model::{Model, ModelSnapshot};
use super::optim::{Adam, AdamConfig};
use super::tensor::{Real, Tensor};
use super::Mode;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 500, batch_size: 32, seed: 0, adam: AdamConfig::default() }
    }
}

/// Borrowed `(N, ...)` inputs with one class label per sample.
#[derive(Debug, Clone, Copy)]
pub struct LabeledBatch<'a, T> {
    pub inputs: &'a Tensor<T>,
    pub labels: &'a [usize],
}

impl<'a, T: Real> LabeledBatch<'a, T> {
    pub fn new(inputs: &'a Tensor<T>, labels: &'a [usize]) -> Result<Self> {
        let (n, _) = inputs.batch_dims()?;
        if n != labels.len() {
            return Err(Error::shape(format!("{n} samples but {} labels", labels.len())));
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    /// Sample-weighted mean training loss of each epoch.
    pub epoch_loss: Vec<f64>,
    /// Validation accuracy (percent) after each epoch, when a validation set was given.
    pub val_accuracy: Vec<f64>,
    /// Epoch whose parameters were kept (best validation accuracy).
    pub best_epoch: Option<usize>,
    pub final_params: ModelSnapshot<T>,
    pub elapsed: Duration,
}

impl<T: Real> TrainReport<T> {
    /// Equality of everything except wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.epoch_loss.len() == other.epoch_loss.len()
            && self.epoch_loss.iter().zip(&other.epoch_loss).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.val_accuracy == other.val_accuracy
            && self.best_epoch == other.best_epoch
            && self.final_params == other.final_params
    }
}

/// Mini-batch Adam on the NLL of the model's log-probability output.
///
/// Each epoch is one pass over a seeded reshuffle of the training set. With a
/// validation set, the parameters of the best-validation epoch are restored
/// at the end.
pub fn train<T: Real>(
    model: &mut Model<T>,
    train_set: LabeledBatch<'_, T>,
    cfg: &TrainConfig,
    validation: Option<LabeledBatch<'_, T>>,
) -> Result<TrainReport<T>> {
    let started = Instant::now();
    if train_set.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let n = train_set.len();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[1]));
    model.reseed(seed::derive(cfg.seed, &[2]));
    let mut opt = Adam::new(cfg.adam);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let mut val_accuracy = Vec::new();
    let mut best: Option<(f64, usize, ModelSnapshot<T>)> = None;

    for epoch in 0..cfg.epochs {
        model.set_mode(Mode::Train);
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = train_set.inputs.gather(chunk)?;
            let y: Vec<usize> = chunk.iter().map(|&i| train_set.labels[i]).collect();
            model.zero_grad();
            let out = model.forward(&x)?;
            let (loss, grad) = nll_loss(&out, &y)?;
            let loss = loss.f64();
            if !loss.is_finite() {
                return Err(Error::numeric(format!("non-finite loss at epoch {epoch}")));
            }
            total += loss * chunk.len() as f64;
            model.backward(&grad, false)?;
            opt.step(&mut model.params_mut())
                .map_err(|e| Error::numeric(format!("epoch {epoch}: {e}")))?;
        }
        epoch_loss.push(total / n as f64);

        if let Some(val) = validation.as_ref() {
            let (pred, _) = predict(model, val.inputs, cfg.batch_size.max(64))?;
            let acc = accuracy_of(&pred, val.labels);
            val_accuracy.push(acc);
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, model.snapshot()));
            }
        }
    }

    let best_epoch = match best {
        Some((_, epoch, snap)) => {
            model.restore(&snap)?;
            Some(epoch)
        }
        None => None,
    };
    model.set_mode(Mode::Eval);
    Ok(TrainReport {
        epoch_loss,
        val_accuracy,
        best_epoch,
        final_params: model.snapshot(),
        elapsed: started.elapsed(),
    })
}

/// Eval-mode forward pass in chunks; labels are the row-wise argmax.
pub fn predict<T: Real>(model: &mut Model<T>, inputs: &Tensor<T>, chunk: usize) -> Result<(Vec<usize>, Tensor<T>)> {
    model.set_mode(Mode::Eval);
    let (n, _) = inputs.batch_dims()?;
    let chunk = chunk.max(1);
    let mut rows: Vec<T> = Vec::new();
    let mut k = 0;
    let idx: Vec<usize> = (0..n).collect();
    for part in idx.chunks(chunk) {
        let out = model.forward(&inputs.gather(part)?)?;
        match *out.shape() {
            [_, kk] => k = kk,
            _ => return Err(Error::shape(format!("prediction output must be (N, K), got {:?}", out.shape()))),
        }
        rows.extend_from_slice(out.data());
    }
    let logprobs = Tensor::from_vec(&[n, k], rows)?;
    logprobs.ensure_finite("prediction")?;
    let labels = logprobs.data().chunks(k.max(1)).take(n).map(argmax).collect();
    Ok((labels, logprobs))
}

fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Percentage of matching labels; 0 for empty input.
pub fn accuracy_of(pred: &[usize], truth: &[usize]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    100.0 * hits as f64 / pred.len() as f64
}
