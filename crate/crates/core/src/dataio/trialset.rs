use std::hash::{DefaultHasher, Hash, Hasher};

use rayon::prelude::*;

use crate::error::{Error, FormatError, Result};
use crate::nn::Tensor;

/// Labels live in `0..MAX_CLASSES`.
pub const MAX_CLASSES: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Session {
    Train,
    Test,
}

impl Session {
    pub fn flag(self) -> u8 {
        match self {
            Session::Train => 0,
            Session::Test => 1,
        }
    }

    pub fn from_flag(flag: u8) -> Option<Self> {
        match flag {
            0 => Some(Session::Train),
            1 => Some(Session::Test),
            _ => None,
        }
    }
}

/// EEG trials `[n_trials, n_channels, n_samples]` with per-trial metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    data: Tensor<f32>,
    pub labels: Vec<u8>,
    pub subjects: Vec<u8>,
    pub sessions: Vec<Session>,
    pub fs: f64,
}

impl TrialSet {
    pub fn new(data: Tensor<f32>, labels: Vec<u8>, subjects: Vec<u8>, sessions: Vec<Session>, fs: f64) -> Result<Self> {
        if data.ndim() != 3 {
            return Err(Error::shape(format!("trial data must be 3-D, got {:?}", data.shape())));
        }
        let n = data.shape()[0];
        if labels.len() != n || subjects.len() != n || sessions.len() != n {
            return Err(Error::shape(format!(
                "{n} trials but {} labels, {} subject ids, {} session flags",
                labels.len(),
                subjects.len(),
                sessions.len()
            )));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::invalid(format!("sample rate must be positive, got {fs}")));
        }
        if let Some((trial, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= MAX_CLASSES) {
            return Err(FormatError::LabelOutOfRange { trial, label }.into());
        }
        Ok(Self { data, labels, subjects, sessions, fs })
    }

    pub fn data(&self) -> &Tensor<f32> {
        &self.data
    }

    pub fn n_trials(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn n_channels(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn n_samples(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn trial(&self, i: usize) -> &[f32] {
        let stride = self.n_channels() * self.n_samples();
        &self.data.data()[i * stride..(i + 1) * stride]
    }

    pub fn channel(&self, i: usize, c: usize) -> &[f32] {
        let t = self.n_samples();
        &self.trial(i)[c * t..(c + 1) * t]
    }

    /// Trial `i` as a row-major `[channels, samples]` f64 buffer.
    pub fn trial_f64(&self, i: usize) -> Vec<f64> {
        self.trial(i).iter().map(|&v| v as f64).collect()
    }

    /// Distinct subject ids in ascending order.
    pub fn subject_ids(&self) -> Vec<u8> {
        let mut s = self.subjects.clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<u8> {
        let mut s = self.labels.clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n_trials()) {
            return Err(Error::invalid(format!("trial index {bad} out of range for {} trials", self.n_trials())));
        }
        Ok(Self {
            data: self.data.gather(idx)?,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            subjects: idx.iter().map(|&i| self.subjects[i]).collect(),
            sessions: idx.iter().map(|&i| self.sessions[i]).collect(),
            fs: self.fs,
        })
    }

    /// Applies `f` to every channel of every trial; all outputs must share
    /// one length. Trials run in parallel.
    pub fn map_channels<F>(&self, fs_out: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let (n, c) = (self.n_trials(), self.n_channels());
        let trials: Vec<Vec<Vec<f64>>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..c)
                    .map(|ch| f(&self.channel(i, ch).iter().map(|&v| v as f64).collect::<Vec<_>>()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let t = trials.first().and_then(|tr| tr.first()).map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * c * t);
        for ch in trials.iter().flatten() {
            if ch.len() != t {
                return Err(Error::shape("channel transform produced ragged output"));
            }
            data.extend(ch.iter().map(|&v| v as f32));
        }
        Self::new(
            Tensor::from_vec(&[n, c, t], data)?,
            self.labels.clone(),
            self.subjects.clone(),
            self.sessions.clone(),
            fs_out,
        )
    }

    /// Hash of the raw samples of trial `i`, for leakage checks.
    pub fn trial_hash(&self, i: usize) -> u64 {
        let mut h = DefaultHasher::new();
        for v in self.trial(i) {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}
