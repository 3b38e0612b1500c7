use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One biquad: `b0 + b1 z^-1 + b2 z^-2` over `1 + a1 z^-1 + a2 z^-2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Section {
    pub fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2]) / (self.a[0] + z_inv * self.a[1] + z2 * self.a[2])
    }

    pub fn poles(&self) -> [Complex64; 2] {
        // roots of z^2 + a1 z + a2
        let (a1, a2) = (self.a[1] / self.a[0], self.a[2] / self.a[0]);
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }
}

/// Band-pass IIR filter stored as cascaded second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    pub sections: Vec<Section>,
    pub order: usize,
    pub lo: f64,
    pub hi: f64,
    pub fs: f64,
}

impl IirFilter {
    /// Complex frequency response at `f` Hz.
    pub fn response(&self, f: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f / self.fs);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    pub fn gain_db(&self, f: f64) -> f64 {
        20.0 * self.response(f).norm().log10()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0 - 1e-9)
    }
}

/// Digital Butterworth band-pass of the given prototype order.
///
/// The analog low-pass prototype is shifted to the pre-warped band, mapped
/// through the bilinear transform and split into `order` biquads, each with
/// a zero at DC and one at Nyquist and unit gain at the band centre.
pub fn butter_bandpass(order: usize, lo: f64, hi: f64, fs: f64) -> Result<IirFilter> {
    if order == 0 {
        return Err(Error::invalid("filter order must be at least 1"));
    }
    if !(fs > 0.0 && lo > 0.0 && lo < hi && hi < fs / 2.0) {
        return Err(Error::invalid(format!("band edges must satisfy 0 < lo < hi < fs/2, got ({lo}, {hi}) at {fs} Hz")));
    }
    let k = 2.0 * fs;
    let wl = k * (PI * lo / fs).tan();
    let wh = k * (PI * hi / fs).tan();
    let bw = wh - wl;
    let w0sq = wl * wh;

    let mut poles = Vec::with_capacity(2 * order);
    for i in 0..order {
        let theta = PI * (2 * i + order + 1) as f64 / (2 * order) as f64;
        let p = Complex64::from_polar(1.0, theta);
        let half = p * bw / 2.0;
        let root = (half * half - w0sq).sqrt();
        for s in [half + root, half - root] {
            poles.push((k + s) / (k - s));
        }
    }

    // conjugate pairs become one biquad each; leftover real poles pair up
    let tol = 1e-10;
    let mut sections = Vec::with_capacity(order);
    let mut real: Vec<f64> = Vec::new();
    for z in &poles {
        if z.im > tol {
            sections.push([-2.0 * z.re, z.norm_sqr()]);
        } else if z.im.abs() <= tol {
            real.push(z.re);
        }
    }
    real.sort_by(|a, b| b.total_cmp(a));
    for pair in real.chunks(2) {
        match pair {
            [r1, r2] => sections.push([-(r1 + r2), r1 * r2]),
            _ => return Err(Error::numeric("unpaired real pole in band-pass design")),
        }
    }
    if sections.len() != order {
        return Err(Error::numeric("pole pairing produced the wrong number of sections"));
    }

    let centre = 2.0 * (w0sq.sqrt() / k).atan();
    let z_inv = Complex64::from_polar(1.0, -centre);
    let sections = sections
        .into_iter()
        .map(|[a1, a2]| {
            let raw = Section { b: [1.0, 0.0, -1.0], a: [1.0, a1, a2] };
            let g = 1.0 / raw.response(z_inv).norm();
            Section { b: [g, 0.0, -g], a: raw.a }
        })
        .collect();
    let filter = IirFilter { sections, order, lo, hi, fs };
    if !filter.is_stable() {
        return Err(Error::numeric(format!("band-pass ({lo}, {hi}) Hz at {fs} Hz is not stable")));
    }
    Ok(filter)
}

/// Band-pass filters over contiguous, ascending bands.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub filters: Vec<IirFilter>,
}

impl FilterBank {
    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn edges(&self) -> Vec<(f64, f64)> {
        self.filters.iter().map(|f| (f.lo, f.hi)).collect()
    }
}

/// Nine 4 Hz bands from 4 to 40 Hz.
pub fn default_bands() -> Vec<(f64, f64)> {
    (0..9).map(|i| (4.0 + 4.0 * i as f64, 8.0 + 4.0 * i as f64)).collect()
}

pub fn make_filter_bank(edges: &[(f64, f64)], order: usize, fs: f64) -> Result<FilterBank> {
    if edges.is_empty() {
        return Err(Error::invalid("filter bank needs at least one band"));
    }
    for w in edges.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::invalid(format!("bands {:?} and {:?} are unsorted or overlap", w[0], w[1])));
        }
    }
    let filters = edges.iter().map(|&(lo, hi)| butter_bandpass(order, lo, hi, fs)).collect::<Result<_>>()?;
    Ok(FilterBank { filters })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broad_band_gains() {
        let f = butter_bandpass(3, 4.0, 40.0, 250.0).unwrap();
        assert_eq!(f.sections.len(), 3);
        assert!(f.gain_db(0.0) < -60.0);
        assert!(f.gain_db((4.0f64 * 40.0).sqrt()) > -1.0);
        assert!(f.is_stable());
    }

    #[test]
    fn narrow_band_gains() {
        let f = butter_bandpass(3, 8.0, 12.0, 250.0).unwrap();
        assert!(f.gain_db(4.0) < -15.0, "{}", f.gain_db(4.0));
        assert!(f.gain_db(24.0) < -15.0, "{}", f.gain_db(24.0));
        assert!(f.gain_db(10.0) > -1.0);
    }

    #[test]
    fn half_power_at_band_edges() {
        // Butterworth edges sit at -3 dB after pre-warping
        for order in 1..=6 {
            let f = butter_bandpass(order, 8.0, 30.0, 250.0).unwrap();
            assert!((f.gain_db(8.0) + 3.0103).abs() < 1e-6, "order {order}: {}", f.gain_db(8.0));
            assert!((f.gain_db(30.0) + 3.0103).abs() < 1e-6);
        }
    }

    #[test]
    fn passband_never_exceeds_unity() {
        let f = butter_bandpass(3, 4.0, 40.0, 250.0).unwrap();
        for i in 0..1250 {
            let g = f.response(i as f64 * 0.1).norm();
            assert!(g <= 1.0 + 1e-9, "{g} at {} Hz", i as f64 * 0.1);
        }
    }

    #[test]
    fn stable_across_many_designs() {
        for order in 1..=8 {
            for (lo, hi) in [(0.5, 2.0), (4.0, 8.0), (36.0, 40.0), (1.0, 120.0), (100.0, 124.0)] {
                assert!(butter_bandpass(order, lo, hi, 250.0).unwrap().is_stable(), "{order} {lo} {hi}");
            }
        }
    }

    #[test]
    fn edge_violations() {
        assert!(butter_bandpass(3, 0.0, 40.0, 250.0).is_err());
        assert!(butter_bandpass(3, 40.0, 4.0, 250.0).is_err());
        assert!(butter_bandpass(3, 4.0, 125.0, 250.0).is_err());
        assert!(butter_bandpass(0, 4.0, 40.0, 250.0).is_err());
    }

    #[test]
    fn filter_banks() {
        let bank = make_filter_bank(&default_bands(), 3, 250.0).unwrap();
        assert_eq!(bank.len(), 9);
        assert_eq!(bank.edges()[0], (4.0, 8.0));
        assert_eq!(bank.edges()[8], (36.0, 40.0));
        assert_eq!(make_filter_bank(&[(4.0, 40.0)], 3, 250.0).unwrap().len(), 1);
        assert!(make_filter_bank(&[(8.0, 12.0), (4.0, 8.0)], 3, 250.0).is_err());
        assert!(make_filter_bank(&[], 3, 250.0).is_err());
    }
}
