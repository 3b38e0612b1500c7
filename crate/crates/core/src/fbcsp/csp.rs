use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Spatial filters of one band: the `2m` rows of `w` are ordered by
/// decreasing eigenvalue, so row `j` and row `2m - 1 - j` form a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CspModel {
    pub w: DMatrix<f64>,
    /// Generalized eigenvalue of each row: its share of class-1 variance.
    pub eigenvalues: Vec<f64>,
}

impl CspModel {
    pub fn pairs(&self) -> usize {
        self.w.nrows() / 2
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Solves `C1 w = λ (C1 + C2) w` by whitening the composite covariance and
/// diagonalizing the whitened class-1 covariance. Keeps the `m` largest
/// and `m` smallest eigenvalues.
pub fn csp_fit(c1: &DMatrix<f64>, c2: &DMatrix<f64>, m: usize) -> Result<CspModel> {
    let n = c1.nrows();
    if c1.shape() != (n, n) || c2.shape() != (n, n) {
        return Err(Error::shape(format!("class covariances {:?} and {:?} must be square and equal", c1.shape(), c2.shape())));
    }
    if m == 0 || 2 * m > n {
        return Err(Error::invalid(format!("{m} filter pairs do not fit {n} channels")));
    }
    let (c1, c2) = (symmetrize(c1), symmetrize(c2));
    let mut composite = &c1 + &c2;
    let scale = composite.trace() / n as f64;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::numeric("composite covariance has no variance"));
    }
    let mut eig = SymmetricEigen::new(composite.clone());
    let min = eig.eigenvalues.min();
    if min <= 1e-10 * scale {
        log::warn!("composite covariance is near-singular (min eigenvalue {min:e}); adding ridge");
        composite += DMatrix::identity(n, n) * (1e-9 * composite.trace());
        eig = SymmetricEigen::new(composite);
        if eig.eigenvalues.min() <= 0.0 {
            return Err(Error::numeric("composite covariance is singular even after ridge"));
        }
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let p = inv_sqrt * eig.eigenvectors.transpose();
    let s1 = symmetrize(&(&p * &c1 * p.transpose()));
    let e1 = SymmetricEigen::new(s1);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e1.eigenvalues[b].total_cmp(&e1.eigenvalues[a]).then(a.cmp(&b)));
    let keep: Vec<usize> = order[..m].iter().chain(&order[n - m..]).copied().collect();

    let full = e1.eigenvectors.transpose() * p;
    let mut w = DMatrix::zeros(2 * m, n);
    for (r, &i) in keep.iter().enumerate() {
        // sign convention: largest-magnitude coefficient positive
        let row = full.row(i);
        let big = row.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if big < 0.0 { -1.0 } else { 1.0 };
        w.row_mut(r).copy_from(&(row * sign));
    }
    let eigenvalues = keep.iter().map(|&i| e1.eigenvalues[i].clamp(0.0, 1.0)).collect();
    Ok(CspModel { w, eigenvalues })
}

/// Log-variance-ratio features of one band from the trial's normalized
/// covariance: `log(v_j / Σ v)` with `v_j = w_j S w_jᵀ`.
pub fn csp_features(model: &CspModel, cov: &DMatrix<f64>) -> Vec<f64> {
    let proj = &model.w * cov * model.w.transpose();
    let v: Vec<f64> = (0..proj.nrows()).map(|j| proj[(j, j)].max(0.0)).collect();
    let total: f64 = v.iter().sum();
    v.iter()
        .map(|&x| {
            let r = if total > 0.0 { x / total } else { 0.0 };
            if r < 1e-12 {
                log::warn!("projected variance ratio {r:e} clamped before log");
            }
            r.max(1e-12).ln()
        })
        .collect()
}
