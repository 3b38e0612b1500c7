use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Percentage of positions where `pred` equals `truth`.
pub fn accuracy<L: PartialEq>(pred: &[L], truth: &[L]) -> Result<f64> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(Error::invalid(format!("accuracy needs equal non-empty inputs, got {} and {}", pred.len(), truth.len())));
    }
    Ok(100.0 * pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / pred.len() as f64)
}

/// Outcome of a paired two-sided t-test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    /// `None` when the differences are constant and nonzero, which leaves
    /// the statistic undefined.
    pub p: Option<f64>,
}

impl TTest {
    pub fn is_degenerate(&self) -> bool {
        self.p.is_none()
    }
}

/// Paired Student t-test on `a - b`; `p` comes from the regularized
/// incomplete beta function, `P(|T| > t) = I_{df/(df+t²)}(df/2, 1/2)`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid(format!("paired t-test needs two equal samples of size >= 2, got {} and {}", a.len(), b.len())));
    }
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let df = a.len() - 1;
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if var.sqrt() <= 1e-14 * scale.max(f64::MIN_POSITIVE) || var == 0.0 {
        if mean == 0.0 || scale == 0.0 {
            return Ok(TTest { t: 0.0, df, p: Some(1.0) });
        }
        return Ok(TTest { t: mean.signum() * f64::INFINITY, df, p: None });
    }
    let t = mean / (var / n).sqrt();
    let x = df as f64 / (df as f64 + t * t);
    let p = beta_reg(df as f64 / 2.0, 0.5, x).clamp(0.0, 1.0);
    Ok(TTest { t, df, p: Some(p) })
}
