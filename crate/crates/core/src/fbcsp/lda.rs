use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Two-class linear discriminant with a logistic posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct Lda {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Prior of the negative and of the positive class.
    pub priors: [f64; 2],
}

/// Fits a shared-covariance discriminant. The pooled covariance is
/// regularized by `1e-6 * trace / d` on the diagonal.
pub fn lda_fit(features: &[Vec<f64>], positive: &[bool]) -> Result<Lda> {
    if features.len() != positive.len() {
        return Err(Error::shape("one label per feature vector"));
    }
    let d = features.first().map_or(0, Vec::len);
    if d == 0 || features.iter().any(|f| f.len() != d) {
        return Err(Error::shape("feature vectors must be non-empty and equally long"));
    }
    let mut sums = [DVector::zeros(d), DVector::zeros(d)];
    let mut counts = [0usize; 2];
    for (f, &p) in features.iter().zip(positive) {
        sums[p as usize] += DVector::from_column_slice(f);
        counts[p as usize] += 1;
    }
    if counts.iter().any(|&c| c < 2) {
        return Err(Error::invalid(format!("each class needs at least 2 samples, got {counts:?}")));
    }
    let means = [&sums[0] / counts[0] as f64, &sums[1] / counts[1] as f64];
    let mut cov = DMatrix::zeros(d, d);
    for (f, &p) in features.iter().zip(positive) {
        let c = DVector::from_column_slice(f) - &means[p as usize];
        cov += &c * c.transpose();
    }
    cov /= (features.len() - 2) as f64;
    let ridge = 1e-6 * cov.trace() / d as f64;
    for i in 0..d {
        cov[(i, i)] += ridge;
    }
    let chol = cov.cholesky().ok_or_else(|| Error::numeric("pooled covariance is singular after ridge"))?;
    let diff = &means[1] - &means[0];
    let w = chol.solve(&diff);
    let n = features.len() as f64;
    let priors = [counts[0] as f64 / n, counts[1] as f64 / n];
    let bias = -w.dot(&(&means[0] + &means[1])) / 2.0 + (priors[1] / priors[0]).ln();
    if !w.iter().all(|v| v.is_finite()) || !bias.is_finite() {
        return Err(Error::numeric("discriminant has non-finite coefficients"));
    }
    Ok(Lda { weights: w.as_slice().to_vec(), bias, priors })
}

/// `[P(negative | x), P(positive | x)]`.
pub fn lda_posterior(lda: &Lda, x: &[f64]) -> [f64; 2] {
    let score: f64 = lda.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + lda.bias;
    let p = 1.0 / (1.0 + (-score).exp());
    [1.0 - p, p]
}
