//! Points on the Stiefel manifold St(p, d) and the plane-rotation machinery
//! used to move between them.
//!
//! All plane indices in the public API are 1-based: the pair `(i, j)` with
//! `1 <= i < j <= p` names the rotation plane spanned by rows `i` and `j`.
//! The planes are enumerated lexicographically, `(1,2), (1,3), ..., (p-1,p)`,
//! and [`pair_index`] maps a 1-based position in that enumeration to its pair.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthonormality tolerance every [`StiefelPoint`] must satisfy.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// A `p x d` real matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    mat: DMatrix<f64>,
}

impl StiefelPoint {
    /// Wraps `mat` after checking `p >= d >= 1` and `||Q^T Q - I||_F <= 1e-8`.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        let (p, d) = mat.shape();
        if d == 0 || d > p {
            return Err(Error::arg(format!(
                "Stiefel point needs p >= d >= 1, got p={p}, d={d}"
            )));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("matrix has non-finite entries"));
        }
        let error = orthonormality_error(&mat);
        if error > FEASIBILITY_TOL {
            return Err(Error::Infeasible {
                error,
                tolerance: FEASIBILITY_TOL,
            });
        }
        Ok(Self { mat })
    }

    #[cfg(test)]
    pub(crate) fn from_matrix_unchecked(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    /// First `d` columns of the `p x p` identity.
    pub fn identity(p: usize, d: usize) -> Result<Self> {
        if d == 0 || d > p {
            return Err(Error::arg(format!(
                "Stiefel point needs p >= d >= 1, got p={p}, d={d}"
            )));
        }
        Ok(Self {
            mat: DMatrix::identity(p, d),
        })
    }

    pub fn p(&self) -> usize {
        self.mat.nrows()
    }

    pub fn d(&self) -> usize {
        self.mat.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.mat)
    }

    /// Applies a single plane rotation, touching only rows `i` and `j`.
    pub fn rotated(&self, mv: GivensMove) -> Result<Self> {
        givens_apply(self, mv)
    }
}

/// A rotation by `theta` radians in the `(i, j)` plane (1-based, `i < j`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GivensMove {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
}

impl GivensMove {
    pub fn new(i: usize, j: usize, theta: f64) -> Result<Self> {
        if i == 0 || i >= j {
            return Err(Error::arg(format!(
                "rotation plane needs 1 <= i < j, got ({i}, {j})"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::arg("rotation angle must be finite"));
        }
        Ok(Self { i, j, theta })
    }

    pub fn inverse(self) -> Self {
        Self {
            theta: -self.theta,
            ..self
        }
    }
}

/// One angle per rotation plane, in lexicographic plane order.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleVector {
    p: usize,
    angles: Vec<f64>,
}

impl AngleVector {
    pub fn new(p: usize, angles: Vec<f64>) -> Result<Self> {
        let n = num_planes(p);
        if angles.len() != n {
            return Err(Error::arg(format!(
                "angle vector for p={p} needs {n} entries, got {}",
                angles.len()
            )));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::arg("angles must be finite"));
        }
        Ok(Self { p, angles })
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            p,
            angles: vec![0.0; num_planes(p)],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.angles
    }
}

/// Number of rotation planes `C(p, 2)`.
pub fn num_planes(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// The `k`-th plane (1-based) in lexicographic order `(1,2), (1,3), ..., (p-1,p)`.
pub fn pair_index(k: usize, p: usize) -> Result<(usize, usize)> {
    if p < 2 {
        return Err(Error::arg(format!("plane enumeration needs p >= 2, got {p}")));
    }
    let n = num_planes(p);
    if k == 0 || k > n {
        return Err(Error::arg(format!("plane index {k} outside 1..={n}")));
    }
    // Row i owns the planes (i, i+1..=p), i.e. p - i of them.
    let mut rem = k;
    let mut i = 1;
    while rem > p - i {
        rem -= p - i;
        i += 1;
    }
    Ok((i, i + rem))
}

/// Iterator over all planes in lexicographic order.
pub fn planes(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..p).flat_map(move |i| (i + 1..=p).map(move |j| (i, j)))
}

fn check_move(p: usize, mv: &GivensMove) -> Result<()> {
    if mv.i == 0 || mv.i >= mv.j || mv.j > p {
        return Err(Error::arg(format!(
            "rotation plane ({}, {}) invalid for p={p}",
            mv.i, mv.j
        )));
    }
    if !mv.theta.is_finite() {
        return Err(Error::arg("rotation angle must be finite"));
    }
    Ok(())
}

/// In-place `R_{ij}(theta) * M` on an arbitrary matrix; cost O(ncols).
pub(crate) fn rotate_rows(m: &mut DMatrix<f64>, i0: usize, j0: usize, theta: f64) {
    let (s, c) = theta.sin_cos();
    for col in 0..m.ncols() {
        let a = m[(i0, col)];
        let b = m[(j0, col)];
        m[(i0, col)] = c * a - s * b;
        m[(j0, col)] = s * a + c * b;
    }
}

/// Left-multiplies `q` by the Givens rotation `R_{ij}(theta)` without forming it.
pub fn givens_apply(q: &StiefelPoint, mv: GivensMove) -> Result<StiefelPoint> {
    check_move(q.p(), &mv)?;
    let mut mat = q.mat.clone();
    rotate_rows(&mut mat, mv.i - 1, mv.j - 1, mv.theta);
    Ok(StiefelPoint { mat })
}

/// Uniformly distributed point on St(p, d): sign-corrected thin QR of a
/// standard Gaussian `p x d` matrix.
pub fn random_stiefel<R: Rng + ?Sized>(p: usize, d: usize, rng: &mut R) -> Result<StiefelPoint> {
    if d == 0 || d > p {
        return Err(Error::arg(format!(
            "random Stiefel point needs p >= d >= 1, got p={p}, d={d}"
        )));
    }
    let g = DMatrix::from_fn(p, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = positive_qr(g)?;
    Ok(StiefelPoint { mat: q })
}

/// Thin QR with each column of Q flipped so the diagonal of R is positive.
fn positive_qr(a: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p, d) = a.shape();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    debug_assert_eq!(q.shape(), (p, d));
    for c in 0..d {
        let rc = r[(c, c)];
        if !(rc.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::RankDeficient);
        }
        if rc < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    Ok(q)
}

/// `||M^T M - I_d||_F` for any `p x d` matrix.
pub fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let d = m.ncols();
    let mut gram = m.tr_mul(m);
    for k in 0..d {
        gram[(k, k)] -= 1.0;
    }
    gram.norm()
}

/// Projects a nearly orthonormal matrix back onto St(p, d) via positive-diagonal QR.
pub fn reorthonormalize(m: &DMatrix<f64>) -> Result<StiefelPoint> {
    let (p, d) = m.shape();
    if d == 0 || d > p {
        return Err(Error::arg(format!("need p >= d >= 1, got p={p}, d={d}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    Ok(StiefelPoint {
        mat: positive_qr(m.clone())?,
    })
}

/// Closest point of St(p, d) in Frobenius norm: the polar factor `U V^T`.
pub fn nearest_orthonormal(a: &DMatrix<f64>) -> Result<StiefelPoint> {
    let (p, d) = a.shape();
    if d == 0 || d > p {
        return Err(Error::arg(format!("need p >= d >= 1, got p={p}, d={d}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= smax * 1e-12 {
        return Err(Error::RankDeficient);
    }
    let u = svd.u.ok_or(Error::RankDeficient)?;
    let vt = svd.v_t.ok_or(Error::RankDeficient)?;
    Ok(StiefelPoint { mat: u * vt })
}

fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Factors a rotation `U` in SO(p) into one Givens angle per plane, so that
/// `givens_compose(angles, I_p)` reproduces `U`.
///
/// Subdiagonal entries are eliminated column by column in lexicographic
/// plane order; each plane is used exactly once, so the recorded zeroing
/// angles (negated) are the factorization. Returned angles lie in (-pi, pi].
pub fn givens_decompose(u: &DMatrix<f64>) -> Result<AngleVector> {
    let (p, c) = u.shape();
    if p != c || p == 0 {
        return Err(Error::arg(format!("expected a square matrix, got {p}x{c}")));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("matrix has non-finite entries"));
    }
    let err = orthonormality_error(u);
    if err > FEASIBILITY_TOL {
        return Err(Error::NotOrthogonal(err));
    }
    let det = u.determinant();
    if (det + 1.0).abs() <= FEASIBILITY_TOL {
        return Err(Error::Reflection);
    }
    if (det - 1.0).abs() > FEASIBILITY_TOL {
        return Err(Error::NotOrthogonal(err));
    }

    let mut work = u.clone();
    let mut angles = Vec::with_capacity(num_planes(p));
    for (i, j) in planes(p) {
        let (i0, j0) = (i - 1, j - 1);
        let a = work[(i0, i0)];
        let b = work[(j0, i0)];
        // R_{ij}(alpha) with alpha = atan2(-b, a) zeroes entry (j, i) and
        // leaves a non-negative pivot.
        let alpha = (-b).atan2(a);
        rotate_rows(&mut work, i0, j0, alpha);
        angles.push(wrap_angle(-alpha));
    }
    Ok(AngleVector { p, angles })
}

/// `[R_{1,2}(t_1) R_{1,3}(t_2) ... R_{p-1,p}(t_N)] Q0`: the last plane is
/// applied first and `(1, 2)` last.
pub fn givens_compose(theta: &AngleVector, q0: &StiefelPoint) -> Result<StiefelPoint> {
    if theta.p() != q0.p() {
        return Err(Error::arg(format!(
            "angle vector built for p={} but base point has p={}",
            theta.p(),
            q0.p()
        )));
    }
    let mut mat = q0.mat.clone();
    let all: Vec<(usize, usize)> = planes(q0.p()).collect();
    for (&(i, j), &t) in all.iter().zip(theta.as_slice()).rev() {
        rotate_rows(&mut mat, i - 1, j - 1, t);
    }
    Ok(StiefelPoint { mat })
}
