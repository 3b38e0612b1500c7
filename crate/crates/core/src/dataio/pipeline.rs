use super::trialset::TrialSet;
use crate::error::{Error, Result};
use crate::signal::{butter_bandpass, ema_standardize, filtfilt, resample, resample_len};

/// Default trial window in seconds from trial onset: the cued imagery period.
pub const DEFAULT_WINDOW: (f64, f64) = (2.0, 6.0);

/// Keeps samples `[round(t_start * fs), round(t_end * fs))` of every trial.
pub fn extract_window(set: &TrialSet, t_start: f64, t_end: f64) -> Result<TrialSet> {
    if !(t_start >= 0.0 && t_end > t_start) {
        return Err(Error::invalid(format!("empty or negative window [{t_start}, {t_end}) s")));
    }
    let a = (t_start * set.fs).round() as usize;
    let b = (t_end * set.fs).round() as usize;
    if b > set.n_samples() || a >= b {
        return Err(Error::invalid(format!(
            "window samples [{a}, {b}) outside trials of {} samples",
            set.n_samples()
        )));
    }
    set.map_channels(set.fs, |x| Ok(x[a..b].to_vec()))
}

/// Optional per-channel preprocessing, applied in the order band-pass,
/// EMA standardization, resampling. The default does nothing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Preprocess {
    pub bandpass: Option<(f64, f64)>,
    pub filter_order: Option<usize>,
    pub ema_decay: Option<f64>,
    pub resample_hz: Option<f64>,
}

impl Preprocess {
    pub const DEFAULT_ORDER: usize = 3;

    pub fn is_identity(&self) -> bool {
        self.bandpass.is_none() && self.ema_decay.is_none() && self.resample_hz.is_none()
    }

    pub fn apply(&self, set: &TrialSet) -> Result<TrialSet> {
        if self.is_identity() {
            return Ok(set.clone());
        }
        if let Some(d) = self.ema_decay {
            if !(0.0..1.0).contains(&d) || d == 0.0 {
                return Err(Error::invalid(format!("EMA decay must lie in (0, 1), got {d}")));
            }
        }
        let filter = match self.bandpass {
            Some((lo, hi)) => Some(butter_bandpass(self.filter_order.unwrap_or(Self::DEFAULT_ORDER), lo, hi, set.fs)?),
            None => None,
        };
        let fs_out = self.resample_hz.unwrap_or(set.fs);
        if resample_len(set.n_samples(), set.fs, fs_out) == 0 {
            return Err(Error::invalid("resampling leaves no samples"));
        }
        let fs_in = set.fs;
        set.map_channels(fs_out, |x| {
            let mut y = match &filter {
                Some(f) => filtfilt(f, x)?,
                None => x.to_vec(),
            };
            if let Some(d) = self.ema_decay {
                y = ema_standardize(&y, d);
            }
            if fs_out != fs_in {
                y = resample(&y, fs_in, fs_out)?;
            }
            Ok(y)
        })
    }
}
