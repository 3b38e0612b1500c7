/// Lower bound on the running deviation.
pub const EMA_SIGMA_FLOOR: f64 = 1e-8;

/// Causal exponential-moving standardization of one channel.
///
/// `m_t = decay * m_{t-1} + (1 - decay) * x_t`, the variance follows the
/// same recursion on `(x_t - m_t)^2`, and the output is
/// `(x_t - m_t) / max(sigma_t, floor)`. The state starts at `m_0 = x_0`,
/// `sigma_0 = floor`.
pub fn ema_standardize(x: &[f64], decay: f64) -> Vec<f64> {
    let Some(&first) = x.first() else { return Vec::new() };
    let mut mean = first;
    let mut var = EMA_SIGMA_FLOOR * EMA_SIGMA_FLOOR;
    let mut out = Vec::with_capacity(x.len());
    out.push(0.0);
    for &v in &x[1..] {
        mean = decay * mean + (1.0 - decay) * v;
        let d = v - mean;
        var = decay * var + (1.0 - decay) * d * d;
        out.push(d / var.sqrt().max(EMA_SIGMA_FLOOR));
    }
    out
}
