use std::f64::consts::PI;

/// Kernel contributions beyond this many bandwidths are dropped.
const KERNEL_REACH: f64 = 8.0;

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

/// Gaussian Parzen density of sorted samples `s` with bandwidth `h` at `x`.
fn parzen(s: &[f64], h: f64, x: f64) -> f64 {
    let lo = s.partition_point(|&v| v < x - KERNEL_REACH * h);
    let hi = s.partition_point(|&v| v <= x + KERNEL_REACH * h);
    let sum: f64 = s[lo..hi].iter().map(|&v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum();
    sum / (s.len() as f64 * h * (2.0 * PI).sqrt())
}

/// Mutual information in bits between a scalar feature and binary labels.
///
/// `I = H(Y) - Ĥ(Y|F)`, where the class-conditional densities are Parzen
/// estimates with Silverman's bandwidth and the conditional entropy is
/// averaged over the samples. The result is clamped to `[0, H(Y)]`.
pub fn mutual_information(feature: &[f64], positive: &[bool]) -> f64 {
    assert_eq!(feature.len(), positive.len(), "one label per sample");
    let n = feature.len();
    let mut classes: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (&f, &p) in feature.iter().zip(positive) {
        classes[p as usize].push(f);
    }
    if classes.iter().any(|c| c.is_empty()) {
        return 0.0;
    }
    let overall = std_dev(feature);
    if overall <= 0.0 || !overall.is_finite() {
        return 0.0;
    }
    let priors = classes.clone().map(|c| c.len() as f64 / n as f64);
    let h_y = -priors.iter().map(|p| p * p.log2()).sum::<f64>();
    let bandwidths = classes.clone().map(|c| {
        let silverman = 1.06 * std_dev(&c) * (c.len() as f64).powf(-0.2);
        silverman.max(1e-3 * overall)
    });
    for c in &mut classes {
        c.sort_by(f64::total_cmp);
    }
    let mut h_cond = 0.0;
    for &x in feature {
        let joint = [0, 1].map(|y| priors[y] * parzen(&classes[y], bandwidths[y], x));
        let z = joint[0] + joint[1];
        if z > 0.0 {
            for j in joint {
                let p = j / z;
                if p > 0.0 {
                    h_cond -= p * p.log2();
                }
            }
        }
    }
    (h_y - h_cond / n as f64).clamp(0.0, h_y)
}

/// Mutual-information feature selection closed under CSP pairs.
///
/// `features[i][f]` is feature `f` of sample `i`, laid out band-major with
/// `2 * pairs` features per band. The `k` most informative features are
/// taken (ties broken by ascending index), then each selected row `j` of a
/// band brings in its partner `2 * pairs - 1 - j`. Returns sorted indices.
pub fn mibif_select(features: &[Vec<f64>], positive: &[bool], k: usize, pairs: usize) -> Vec<usize> {
    let d = features.first().map_or(0, Vec::len);
    let per_band = 2 * pairs;
    let column = |f: usize| features.iter().map(|row| row[f]).collect::<Vec<_>>();
    let mut scored: Vec<(usize, f64)> = (0..d).map(|f| (f, mutual_information(&column(f), positive))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut chosen: Vec<usize> = scored
        .iter()
        .take(k.min(d))
        .flat_map(|&(f, _)| {
            let (band, row) = (f / per_band, f % per_band);
            [f, band * per_band + per_band - 1 - row]
        })
        .filter(|&f| f < d)
        .collect();
    chosen.sort_unstable();
    chosen.dedup();
    chosen
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn balanced(n: usize) -> Vec<bool> {
        (0..n).map(|i| i % 2 == 1).collect()
    }

    #[test]
    fn independent_feature_carries_little() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mi = mutual_information(&x, &balanced(2000));
        assert!(mi <= 0.05, "{mi}");
    }

    #[test]
    fn separated_feature_carries_a_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y = balanced(2000);
        let x: Vec<f64> = y.iter().map(|&p| if p { 10.0 } else { 0.0 } + rng.random_range(-1.0..1.0)).collect();
        let mi = mutual_information(&x, &y);
        assert!((0.9..=1.0).contains(&mi), "{mi}");
    }

    #[test]
    fn constant_feature_is_zero() {
        assert_eq!(mutual_information(&[2.0; 50], &balanced(50)), 0.0);
    }

    #[test]
    fn bounded_by_label_entropy() {
        let y: Vec<bool> = (0..40).map(|i| i < 10).collect();
        let x: Vec<f64> = (0..40).map(|i| if i < 10 { 100.0 + i as f64 } else { i as f64 * 0.01 }).collect();
        let hy = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        let mi = mutual_information(&x, &y);
        assert!(mi <= hy + 1e-12 && mi > 0.9 * hy, "{mi} vs {hy}");
    }

    #[test]
    fn complement_rule() {
        // feature 0 is the only informative one; pairs = 2 so its partner is 3
        let y = balanced(200);
        let rows: Vec<Vec<f64>> = y
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let noise = |k: usize| ((i * 7919 + k * 104729) % 1000) as f64 / 1000.0;
                vec![if p { 5.0 } else { 0.0 } + noise(0), noise(1), noise(2), noise(3), noise(4), noise(5), noise(6), noise(7)]
            })
            .collect();
        let sel = mibif_select(&rows, &y, 1, 2);
        assert_eq!(sel, vec![0, 3]);
    }

    #[test]
    fn full_k_is_identity() {
        let y = balanced(20);
        let rows: Vec<Vec<f64>> = (0..20).map(|i| (0..8).map(|f| ((i * 31 + f * 17) % 13) as f64).collect()).collect();
        assert_eq!(mibif_select(&rows, &y, 8, 2), (0..8).collect::<Vec<_>>());
    }
}
