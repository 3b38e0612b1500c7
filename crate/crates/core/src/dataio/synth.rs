use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::trialset::{Session, TrialSet, MAX_CLASSES};
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::seed::derive;

/// Parameters of the band-power generator.
///
/// Class `k` adds an oscillation whose components lie in
/// `class_freqs[k] ± bandwidth` Hz on channel `class_channels[k]`, on top
/// of unit-variance pink noise on every channel. `snr` is the RMS ratio of
/// the oscillation to the background.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_channels: usize,
    pub n_samples: usize,
    pub fs: f64,
    pub class_freqs: Vec<f64>,
    pub class_channels: Vec<usize>,
    pub bandwidth: f64,
    pub snr: f64,
    pub subjects: usize,
    /// Per subject, per session and per class.
    pub trials_per_class: usize,
    pub seed: u64,
}

impl SynthConfig {
    /// 10 Hz on channel 1 against 30 Hz on channel 2.
    pub fn two_class(seed: u64) -> Self {
        Self {
            n_channels: 8,
            n_samples: 256,
            fs: 128.0,
            class_freqs: vec![10.0, 30.0],
            class_channels: vec![1, 2],
            bandwidth: 1.0,
            snr: 1.0,
            subjects: 1,
            trials_per_class: 60,
            seed,
        }
    }

    /// Four rhythms on four channels, each inside one filter-bank band.
    pub fn four_class(seed: u64) -> Self {
        Self { class_freqs: vec![10.0, 18.0, 26.0, 34.0], class_channels: vec![1, 2, 3, 4], ..Self::two_class(seed) }
    }

    pub fn n_classes(&self) -> usize {
        self.class_freqs.len()
    }

    fn check(&self) -> Result<()> {
        let k = self.n_classes();
        if k < 2 || k > MAX_CLASSES as usize || self.class_channels.len() != k {
            return Err(Error::invalid(format!(
                "need 2..={MAX_CLASSES} classes with one channel each, got {k} frequencies and {} channels",
                self.class_channels.len()
            )));
        }
        if self.n_channels == 0 || self.n_samples == 0 || self.subjects == 0 || self.subjects > 255 || self.trials_per_class == 0 {
            return Err(Error::invalid("channel, sample, subject and trial counts must be positive"));
        }
        if let Some(&c) = self.class_channels.iter().find(|&&c| c >= self.n_channels) {
            return Err(Error::invalid(format!("class channel {c} outside {} channels", self.n_channels)));
        }
        let mut bands: Vec<(f64, f64)> = self.class_freqs.iter().map(|&f| (f - self.bandwidth, f + self.bandwidth)).collect();
        if bands.iter().any(|&(lo, hi)| lo <= 0.0 || hi >= self.fs / 2.0) {
            return Err(Error::invalid("class bands must lie inside (0, fs/2)"));
        }
        bands.sort_by(|a, b| a.0.total_cmp(&b.0));
        if bands.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::invalid("class bands overlap"));
        }
        Ok(())
    }
}

/// Unit-variance pink noise (Kellet's three-pole 1/f approximation).
fn pink(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    let mut out: Vec<f64> = (0..n)
        .map(|_| {
            let w: f64 = StandardNormal.sample(rng);
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect();
    let mean = out.iter().sum::<f64>() / n as f64;
    let sd = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt().max(1e-12);
    out.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    out
}

/// Three random-phase components inside `f ± bw`, scaled to RMS `amp`.
fn rhythm(n: usize, fs: f64, f: f64, bw: f64, amp: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let comps: Vec<(f64, f64)> =
        (0..3).map(|_| (rng.random_range(f - bw..=f + bw), rng.random_range(0.0..2.0 * PI))).collect();
    // three unit sinusoids at distinct frequencies have RMS sqrt(3/2)
    let scale = amp / 1.5f64.sqrt();
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            scale * comps.iter().map(|&(fq, ph)| (2.0 * PI * fq * t + ph).sin()).sum::<f64>()
        })
        .collect()
}

/// Generates a balanced set: for each subject and each session,
/// `trials_per_class` trials of every class, classes interleaved.
pub fn synth_mi(cfg: &SynthConfig) -> Result<TrialSet> {
    cfg.check()?;
    let (c, t, k) = (cfg.n_channels, cfg.n_samples, cfg.n_classes());
    let mut data = Vec::new();
    let (mut labels, mut subjects, mut sessions) = (Vec::new(), Vec::new(), Vec::new());
    for subj in 0..cfg.subjects {
        let gain = {
            let mut r = ChaCha8Rng::seed_from_u64(derive(cfg.seed, &[subj as u64]));
            r.random_range(0.8..1.2)
        };
        for (si, session) in [Session::Train, Session::Test].into_iter().enumerate() {
            for j in 0..cfg.trials_per_class * k {
                let class = j % k;
                let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, &[subj as u64, si as u64, j as u64]));
                let mut trial: Vec<Vec<f64>> = (0..c).map(|_| pink(t, &mut rng)).collect();
                if cfg.snr > 0.0 {
                    let osc = rhythm(t, cfg.fs, cfg.class_freqs[class], cfg.bandwidth, cfg.snr * gain, &mut rng);
                    trial[cfg.class_channels[class]].iter_mut().zip(&osc).for_each(|(v, o)| *v += o);
                }
                data.extend(trial.iter().flatten().map(|&v| v as f32));
                labels.push(class as u8);
                subjects.push(subj as u8 + 1);
                sessions.push(session);
            }
        }
    }
    let n = labels.len();
    TrialSet::new(Tensor::from_vec(&[n, c, t], data)?, labels, subjects, sessions, cfg.fs)
}
