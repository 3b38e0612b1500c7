use super::butter::{IirFilter, Section};
use crate::error::{Error, Result};

fn run_section(s: &Section, x: &mut [f64], zi: [f64; 2]) {
    let [b0, b1, b2] = s.b;
    let (a1, a2) = (s.a[1], s.a[2]);
    let [mut z1, mut z2] = zi;
    for v in x.iter_mut() {
        let xi = *v;
        let y = b0 * xi + z1;
        z1 = b1 * xi - a1 * y + z2;
        z2 = b2 * xi - a2 * y;
        *v = y;
    }
}

/// Steady-state state of each section for a unit step, scaled by the DC
/// gain of the preceding sections.
fn step_states(filter: &IirFilter) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    filter
        .sections
        .iter()
        .map(|s| {
            let g = (s.b[0] + s.b[1] + s.b[2]) / (s.a[0] + s.a[1] + s.a[2]);
            let z2 = s.b[2] - s.a[2] * g;
            let z1 = s.b[1] - s.a[1] * g + z2;
            let out = [scale * z1, scale * z2];
            scale *= g;
            out
        })
        .collect()
}

/// Causal filtering with zero initial state.
pub fn sosfilt(filter: &IirFilter, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for s in &filter.sections {
        run_section(s, &mut y, [0.0, 0.0]);
    }
    y
}

fn filter_with_initial(filter: &IirFilter, zi: &[[f64; 2]], x: &mut [f64]) {
    let x0 = x[0];
    for (s, z) in filter.sections.iter().zip(zi) {
        run_section(s, x, [z[0] * x0, z[1] * x0]);
    }
}

/// Zero-phase forward-backward filtering.
///
/// The signal is extended at both ends by odd reflection over
/// `3 * (2 * sections + 1)` samples and each pass starts from the step
/// steady state, which suppresses edge transients.
pub fn filtfilt(filter: &IirFilter, x: &[f64]) -> Result<Vec<f64>> {
    let pad = 3 * (2 * filter.sections.len() + 1);
    let n = x.len();
    if n <= pad {
        return Err(Error::invalid(format!("signal of {n} samples is too short for zero-phase filtering (needs > {pad})")));
    }
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let zi = step_states(filter);
    filter_with_initial(filter, &zi, &mut ext);
    ext.reverse();
    filter_with_initial(filter, &zi, &mut ext);
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}
