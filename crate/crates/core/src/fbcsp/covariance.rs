use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Trace-normalized spatial covariance `E Eᵀ / tr(E Eᵀ)` of a row-major
/// `[channels, samples]` trial, after removing each channel's mean.
pub fn trial_covariance(trial: &[f64], channels: usize) -> Result<DMatrix<f64>> {
    if channels == 0 || !trial.len().is_multiple_of(channels) || trial.is_empty() {
        return Err(Error::shape(format!("{} samples do not split into {channels} channels", trial.len())));
    }
    let t = trial.len() / channels;
    let mut e = DMatrix::from_row_slice(channels, t, trial);
    for mut row in e.row_iter_mut() {
        let mean = row.sum() / t as f64;
        row.add_scalar_mut(-mean);
    }
    let cov = &e * e.transpose();
    let tr = cov.trace();
    if tr <= 0.0 || !tr.is_finite() {
        return Err(Error::numeric("degenerate trial: zero or non-finite total variance"));
    }
    Ok(cov / tr)
}
