//! Digital preprocessing for EEG channels.
//!
//! Everything here works on plain `f64` sample slices. Callers decide how
//! trials and channels are laid out and whether to run them in parallel.

mod butter;
mod ema;
mod filtfilt;
mod resample;

pub use butter::{butter_bandpass, default_bands, make_filter_bank, FilterBank, IirFilter, Section};
pub use ema::{ema_standardize, EMA_SIGMA_FLOOR};
pub use filtfilt::{filtfilt, sosfilt};
pub use resample::{resample, resample_len};
