//! Reference solutions and quality metrics.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::stiefel::StiefelPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baseline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tolerance: Option<f64>,
}

impl MetricReport {
    pub fn new(name: impl Into<String>, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::arg("metric value must be finite"));
        }
        Ok(Self { name: name.into(), value, baseline: None, tolerance: None })
    }

    pub fn with_baseline(mut self, baseline: f64, tolerance: Option<f64>) -> Self {
        self.baseline = Some(baseline);
        self.tolerance = tolerance;
        self
    }

    /// `None` without a baseline and tolerance.
    pub fn within_tolerance(&self) -> Option<bool> {
        Some((self.value - self.baseline?).abs() <= self.tolerance?)
    }
}

fn check_symmetric(h: &DMatrix<f64>) -> Result<()> {
    if !h.is_square() {
        return Err(Error::arg(format!("H must be square, got {:?}", h.shape())));
    }
    let asym = (h - h.transpose()).norm();
    if asym > 1e-8 * h.norm().max(1.0) {
        return Err(Error::arg(format!("H is not symmetric (||H - H^T|| = {asym:e})")));
    }
    Ok(())
}

/// Sum of the `d` smallest eigenvalues of `h` and an orthonormal basis of
/// the matching eigenvectors, ordered by ascending eigenvalue.
pub fn eig_ground_truth(h: &DMatrix<f64>, d: usize) -> Result<(f64, StiefelPoint)> {
    check_symmetric(h)?;
    let p = h.nrows();
    if d == 0 || d > p {
        return Err(Error::arg(format!("need 1 <= d <= p = {p}")));
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let value = order[..d].iter().map(|&k| eig.eigenvalues[k]).sum();
    let cols: Vec<_> = order[..d].iter().map(|&k| eig.eigenvectors.column(k)).collect();
    let q = StiefelPoint::new(DMatrix::from_columns(&cols))?;
    Ok((value, q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleMinimum {
    pub value: f64,
    pub angle: f64,
    /// For St(2, 2): the minimum lies in the component with determinant -1.
    pub reflected: bool,
}

/// Grid minimum of an objective on St(2, 1) or St(2, 2).
///
/// Points are `R(theta) Q0` for `resolution` equally spaced angles in
/// [0, 2 pi). The circle already covers both signs of a single column; for
/// St(2, 2) both `Q0 = I` and `Q0 = diag(1, -1)` are scanned so reflections
/// are not missed.
pub fn circle_brute_force(objective: &dyn Objective, resolution: usize) -> Result<CircleMinimum> {
    let (p, d) = objective.dims();
    if p != 2 || !(d == 1 || d == 2) {
        return Err(Error::arg(format!("circle search needs St(2, 1) or St(2, 2), got St({p}, {d})")));
    }
    if resolution < 1000 {
        return Err(Error::arg("circle search needs resolution >= 1000"));
    }
    let branches: &[bool] = if d == 2 { &[false, true] } else { &[false] };
    let mut best: Option<CircleMinimum> = None;
    for &reflected in branches {
        for step in 0..resolution {
            let angle = 2.0 * PI * step as f64 / resolution as f64;
            let (s, c) = angle.sin_cos();
            let mut m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]).columns(0, d).into_owned();
            if reflected {
                m.column_mut(1).neg_mut();
            }
            let q = StiefelPoint::new(m)?;
            let v = objective.evaluate(&q)?;
            if v.is_finite() && best.is_none_or(|b| v < b.value) {
                best = Some(CircleMinimum { value: v, angle, reflected });
            }
        }
    }
    best.ok_or_else(|| Error::Objective("objective is non-finite on the whole circle".into()))
}

/// Normalized Amari index of `P = w_hat * a`: 0 exactly for scaled
/// permutations, at most 1, and unchanged by rescaling rows of `w_hat`.
pub fn amari_distance(w_hat: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<f64> {
    let p = a.nrows();
    if !a.is_square() || w_hat.shape() != a.shape() {
        return Err(Error::arg("Amari distance needs square matrices of equal size"));
    }
    if p < 2 {
        return Err(Error::arg("Amari distance needs p >= 2"));
    }
    let svd = a.clone().svd(false, false);
    if svd.singular_values.min() <= 1e-12 * svd.singular_values.max() {
        return Err(Error::RankDeficient);
    }
    let mut m = (w_hat * a).abs();
    // Scale rows to unit maximum first so the column terms ignore the
    // arbitrary scale of each recovered component.
    for mut row in m.row_iter_mut() {
        let max = row.max();
        if max == 0.0 {
            return Err(Error::RankDeficient);
        }
        row /= max;
    }
    let ratio_sum = |line: Vec<f64>| -> Result<f64> {
        let max = line.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Err(Error::RankDeficient);
        }
        Ok(line.iter().sum::<f64>() / max - 1.0)
    };
    let mut rows = 0.0;
    let mut cols = 0.0;
    for i in 0..p {
        rows += ratio_sum(m.row(i).iter().copied().collect())?;
        cols += ratio_sum(m.column(i).iter().copied().collect())?;
    }
    let denom = (p - 1) as f64;
    Ok((rows / denom + cols / denom) / (2.0 * p as f64))
}

/// How far `m` is from a signed permutation: the largest, over columns, of
/// `|1 - max_i |m_ij||` and the second largest `|m_ij|`. Rows holding the
/// column maxima must be distinct, otherwise the result is 1.
pub fn signed_permutation_deviation(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() || m.is_empty() {
        return Err(Error::arg("signed permutation check needs a non-empty square matrix"));
    }
    let mut used = vec![false; m.nrows()];
    let mut worst: f64 = 0.0;
    for col in m.column_iter() {
        let (imax, top) = col.iter().map(|v| v.abs()).enumerate().fold((0, -1.0), |b, (i, v)| if v > b.1 { (i, v) } else { b });
        if used[imax] {
            return Ok(worst.max(1.0));
        }
        used[imax] = true;
        let second = col.iter().enumerate().filter(|&(i, _)| i != imax).map(|(_, v)| v.abs()).fold(0.0, f64::max);
        worst = worst.max((1.0 - top).abs()).max(second);
    }
    Ok(worst)
}

/// Mean absolute entrywise error.
pub fn mae(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(Error::arg(format!(
            "shape mismatch: {:?} vs {:?}",
            estimate.shape(),
            truth.shape()
        )));
    }
    if truth.is_empty() {
        return Err(Error::arg("MAE of empty matrices"));
    }
    Ok((estimate - truth).abs().sum() / truth.len() as f64)
}

/// Norm of the Riemannian gradient of `tr(Q^T H Q)` under the embedded metric:
/// `||G - Q sym(Q^T G)||_F` with `G = 2 H Q`.
pub fn kkt_residual(h: &DMatrix<f64>, q: &StiefelPoint) -> Result<f64> {
    check_symmetric(h)?;
    if h.nrows() != q.p() {
        return Err(Error::arg(format!("H is {}x{}, Q has {} rows", h.nrows(), h.ncols(), q.p())));
    }
    let q = q.matrix();
    let g = h * q * 2.0;
    let qtg = q.tr_mul(&g);
    let sym = (&qtg + qtg.transpose()) * 0.5;
    Ok((g - q * sym).norm())
}

/// Upper bound `L N s0^2 / (8 (rho^2 - 1) (k + 1))` on the optimality gap at
/// the `k`-th step reduction of a coordinate search on a convex `L`-smooth
/// function of `N` variables.
pub fn rate_bound(k: usize, lipschitz: f64, n: usize, s0: f64, rho: f64) -> f64 {
    lipschitz * n as f64 * s0 * s0 / (8.0 * (rho * rho - 1.0) * (k as f64 + 1.0))
}

/// Whether every `(k, g_k)` stays within [`rate_bound`] of `g_star` (plus 1e-12).
pub fn rate_bound_check(events: &[(usize, f64)], g_star: f64, lipschitz: f64, n: usize, s0: f64, rho: f64) -> bool {
    events
        .iter()
        .all(|&(k, g)| g - g_star <= rate_bound(k, lipschitz, n, s0, rho) + 1e-12)
}
