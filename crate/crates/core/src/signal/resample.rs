use std::f64::consts::PI;

use crate::error::{Error, Result};

const KAISER_BETA: f64 = 5.0;
/// Filter half-length in units of the larger of the two rate factors.
const HALF_LEN_FACTOR: usize = 10;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Reduced integer ratio `(up, down)` for `fs_out / fs_in`, resolved to a
/// millihertz grid.
fn ratio(fs_in: f64, fs_out: f64) -> Result<(usize, usize)> {
    if !(fs_in > 0.0 && fs_out > 0.0 && fs_in.is_finite() && fs_out.is_finite()) {
        return Err(Error::invalid(format!("sample rates must be positive, got {fs_in} -> {fs_out}")));
    }
    let a = (fs_in * 1000.0).round() as u64;
    let b = (fs_out * 1000.0).round() as u64;
    if a == 0 || b == 0 {
        return Err(Error::invalid("sample rate below the millihertz grid"));
    }
    let g = gcd(a, b);
    Ok(((b / g) as usize, (a / g) as usize))
}

/// Number of output samples for `n` inputs: `round(n * fs_out / fs_in)`.
pub fn resample_len(n: usize, fs_in: f64, fs_out: f64) -> usize {
    (n as f64 * fs_out / fs_in).round() as usize
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser-windowed sinc low-pass with cutoff `cutoff` (fraction of Nyquist)
/// and unit DC gain.
fn lowpass_taps(len: usize, cutoff: f64) -> Vec<f64> {
    let mid = (len - 1) as f64 / 2.0;
    let norm = bessel_i0(KAISER_BETA);
    let mut h: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 - mid;
            let arg = PI * cutoff * t;
            let sinc = if t == 0.0 { 1.0 } else { arg.sin() / arg };
            let r = t / mid;
            let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm;
            cutoff * sinc * w
        })
        .collect();
    let s: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= s);
    h
}

/// Polyphase rational resampling.
///
/// The signal is conceptually upsampled by `up`, low-passed at
/// `min(fs_in, fs_out) / 2` with a Kaiser-windowed sinc and decimated by
/// `down`; only the taps that hit nonzero inputs are evaluated. Samples
/// outside the signal count as zero.
pub fn resample(x: &[f64], fs_in: f64, fs_out: f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::invalid("cannot resample an empty signal"));
    }
    let (up, down) = ratio(fs_in, fs_out)?;
    if up == down {
        return Ok(x.to_vec());
    }
    let half = HALF_LEN_FACTOR * up.max(down);
    let taps: Vec<f64> = lowpass_taps(2 * half + 1, 1.0 / up.max(down) as f64).into_iter().map(|v| v * up as f64).collect();
    let n_out = resample_len(x.len(), fs_in, fs_out);
    let n = x.len() as isize;
    let up_i = up as isize;
    let out = (0..n_out)
        .map(|m| {
            // position on the upsampled grid, delayed by the filter centre
            let t = (m * down + half) as isize;
            let j_hi = (t / up_i).min(n - 1);
            let j_lo = (t - taps.len() as isize + 1 + up_i - 1).div_euclid(up_i).max(0);
            (j_lo..=j_hi).map(|j| x[j as usize] * taps[(t - j * up_i) as usize]).sum()
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect()
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let ma = a.iter().sum::<f64>() / a.len() as f64;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma).powi(2);
            sbb += (y - mb).powi(2);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn ratio_reduction() {
        assert_eq!(ratio(250.0, 128.0).unwrap(), (64, 125));
        assert_eq!(ratio(128.0, 256.0).unwrap(), (2, 1));
        assert!(ratio(0.0, 128.0).is_err());
    }

    #[test]
    fn four_seconds_to_512() {
        let y = resample(&tone(5.0, 250.0, 1000), 250.0, 128.0).unwrap();
        assert_eq!(y.len(), 512);
    }

    #[test]
    fn identity_ratio() {
        let x = tone(7.0, 250.0, 300);
        assert_eq!(resample(&x, 250.0, 250.0).unwrap(), x);
    }

    #[test]
    fn tones_survive() {
        for f in [5.0, 12.0, 25.0, 39.0] {
            let y = resample(&tone(f, 250.0, 1000), 250.0, 128.0).unwrap();
            let want = tone(f, 128.0, 512);
            let c = corr(&y, &want);
            assert!(c > 0.99, "{f} Hz: {c}");
        }
    }

    #[test]
    fn upsampling_interpolates() {
        let y = resample(&tone(3.0, 100.0, 400), 100.0, 300.0).unwrap();
        assert_eq!(y.len(), 1200);
        let want = tone(3.0, 300.0, 1200);
        for i in 100..1100 {
            assert!((y[i] - want[i]).abs() < 1e-2, "{i}");
        }
    }

    #[test]
    fn aliasing_band_is_suppressed() {
        // 100 Hz lies above the 64 Hz output Nyquist
        let y = resample(&tone(100.0, 250.0, 2000), 250.0, 128.0).unwrap();
        let rms = (y[100..900].iter().map(|v| v * v).sum::<f64>() / 800.0).sqrt();
        assert!(rms < 0.01, "{rms}");
    }

    #[test]
    fn bessel_reference_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_442).abs() < 1e-11);
    }
}
