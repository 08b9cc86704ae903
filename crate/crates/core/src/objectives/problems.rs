//! Structured problems: quadratic forms, robust low-rank recovery, ICA,
//! factor rotation, joint diagonalization, Rayleigh-Ritz and supervised
//! sparse PCA.

use nalgebra::DMatrix;

use super::Objective;
use crate::error::{Error, Result};
use crate::stiefel::StiefelPoint;

const SYMMETRY_TOL: f64 = 1e-8;

fn check_symmetric(h: &DMatrix<f64>, what: &str) -> Result<()> {
    if !h.is_square() {
        return Err(Error::arg(format!("{what} must be square, got {:?}", h.shape())));
    }
    let asym = (h - h.transpose()).norm();
    if asym > SYMMETRY_TOL {
        return Err(Error::arg(format!("{what} is not symmetric (||H - H^T|| = {asym:e})")));
    }
    Ok(())
}

fn check_rows(q: &DMatrix<f64>, p: usize, what: &str) -> Result<()> {
    if q.nrows() != p {
        return Err(Error::arg(format!(
            "{what}: expected {p} rows in Q, got {}",
            q.nrows()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Heterogeneous quadratic forms

/// `-sum_i q_i^T M_i q_i` with `q_i` the i-th column of `q`.
pub fn hetero_quadratic(ms: &[DMatrix<f64>], q: &DMatrix<f64>) -> Result<f64> {
    if ms.len() != q.ncols() {
        return Err(Error::arg(format!(
            "need one matrix per column: {} matrices for d={}",
            ms.len(),
            q.ncols()
        )));
    }
    let mut total = 0.0;
    for (i, m) in ms.iter().enumerate() {
        if m.shape() != (q.nrows(), q.nrows()) {
            return Err(Error::arg(format!(
                "M_{} is {:?}, expected {p}x{p}",
                i + 1,
                m.shape(),
                p = q.nrows()
            )));
        }
        let col = q.column(i);
        total += col.dot(&(m * col));
    }
    Ok(-total)
}

#[derive(Debug, Clone)]
pub struct HeteroQuadratic {
    ms: Vec<DMatrix<f64>>,
    p: usize,
}

impl HeteroQuadratic {
    pub fn new(ms: Vec<DMatrix<f64>>) -> Result<Self> {
        let p = ms.first().map(|m| m.nrows()).ok_or_else(|| Error::arg("no matrices"))?;
        for (i, m) in ms.iter().enumerate() {
            check_symmetric(m, &format!("M_{}", i + 1))?;
            if m.nrows() != p {
                return Err(Error::arg("all M_i must share one size"));
            }
        }
        if ms.len() > p {
            return Err(Error::arg(format!("d = {} exceeds p = {p}", ms.len())));
        }
        Ok(Self { ms, p })
    }
}

impl Objective for HeteroQuadratic {
    fn name(&self) -> &str {
        "hetquad"
    }
    fn dims(&self) -> (usize, usize) {
        (self.p, self.ms.len())
    }
    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        hetero_quadratic(&self.ms, q.matrix())
    }
}

// ---------------------------------------------------------------------------
// Low-rank + sparse

pub fn default_lr_lambda(n: usize, p: usize) -> f64 {
    1.0 / (n.max(p) as f64).sqrt()
}

/// `||X Q Q^T||_* + lambda ||X (I - Q Q^T)||_1`.
pub fn lr_sparse(x: &DMatrix<f64>, lambda: f64, q: &DMatrix<f64>) -> Result<f64> {
    check_rows(q, x.ncols(), "lr_sparse")?;
    if !(lambda > 0.0) {
        return Err(Error::arg("lambda must be positive"));
    }
    let low = x * q * q.transpose();
    let nuclear: f64 = low.clone().svd(false, false).singular_values.sum();
    let l1: f64 = (x - &low).iter().map(|v| v.abs()).sum();
    Ok(nuclear + lambda * l1)
}

#[derive(Debug, Clone)]
pub struct LowRankSparse {
    x: DMatrix<f64>,
    lambda: f64,
    d: usize,
}

impl LowRankSparse {
    /// `lambda = None` uses `1 / sqrt(max(n, p))`.
    pub fn new(x: DMatrix<f64>, lambda: Option<f64>, d: usize) -> Result<Self> {
        let lambda = lambda.unwrap_or_else(|| default_lr_lambda(x.nrows(), x.ncols()));
        if !(lambda > 0.0) {
            return Err(Error::arg("lambda must be positive"));
        }
        if d == 0 || d > x.ncols() {
            return Err(Error::arg(format!("need 1 <= d <= p = {}", x.ncols())));
        }
        Ok(Self { x, lambda, d })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Objective for LowRankSparse {
    fn name(&self) -> &str {
        "lrsparse"
    }
    fn dims(&self) -> (usize, usize) {
        (self.x.ncols(), self.d)
    }
    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        lr_sparse(&self.x, self.lambda, q.matrix())
    }
}

// ---------------------------------------------------------------------------
// ICA

/// `log cosh z`, written as `|z| + log1p(exp(-2|z|)) - log 2` so it never overflows.
pub fn log_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `-(1/n) sum_t sum_i log cosh(w_i^T x_t)` with `w_i` the rows of `w`.
pub fn ica_logcosh(xw: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<f64> {
    let n = xw.ncols();
    if n == 0 {
        return Err(Error::arg("ICA objective needs at least one sample"));
    }
    if !w.is_square() || w.ncols() != xw.nrows() {
        return Err(Error::arg(format!(
            "unmixing matrix {:?} incompatible with {} signals",
            w.shape(),
            xw.nrows()
        )));
    }
    let y = w * xw;
    let total: f64 = y.iter().map(|&z| log_cosh(z)).sum();
    Ok(-total / n as f64)
}

#[derive(Debug, Clone)]
pub struct IcaLogCosh {
    xw: DMatrix<f64>,
}

impl IcaLogCosh {
    pub fn new(xw: DMatrix<f64>) -> Result<Self> {
        if xw.ncols() == 0 || xw.nrows() == 0 {
            return Err(Error::arg("ICA objective needs non-empty whitened data"));
        }
        Ok(Self { xw })
    }
}

impl Objective for IcaLogCosh {
    fn name(&self) -> &str {
        "ica"
    }
    fn dims(&self) -> (usize, usize) {
        (self.xw.nrows(), self.xw.nrows())
    }
    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        ica_logcosh(&self.xw, q.matrix())
    }
}

// ---------------------------------------------------------------------------
// Varimax

/// The Varimax criterion `V` of a loading matrix `b` (n x p).
pub fn varimax(b: &DMatrix<f64>) -> f64 {
    let n = b.nrows() as f64;
    b.column_iter()
        .map(|col| {
            let m4 = col.iter().map(|v| v.powi(4)).sum::<f64>() / n;
            let m2 = col.iter().map(|v| v * v).sum::<f64>() / n;
            m4 - m2 * m2
        })
        .sum()
}

/// `-V(A R)`.
pub fn varimax_neg(a: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<f64> {
    if !r.is_square() || r.nrows() != a.ncols() {
        return Err(Error::arg(format!(
            "rotation {:?} incompatible with loadings {:?}",
            r.shape(),
            a.shape()
        )));
    }
    if a.nrows() == 0 {
        return Err(Error::arg("loading matrix has no rows"));
    }
    Ok(-varimax(&(a * r)))
}

#[derive(Debug, Clone)]
pub struct VarimaxRotation {
    a: DMatrix<f64>,
}

impl VarimaxRotation {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::arg("loading matrix is empty"));
        }
        Ok(Self { a })
    }
}

impl Objective for VarimaxRotation {
    fn name(&self) -> &str {
        "varimax"
    }
    fn dims(&self) -> (usize, usize) {
        (self.a.ncols(), self.a.ncols())
    }
    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        varimax_neg(&self.a, q.matrix())
    }
}

// ---------------------------------------------------------------------------
// Orthogonal joint diagonalization

/// `sum_k ||offdiag(W^T C_k W)||_F^2`.
pub fn ojd_offdiag(cs: &[DMatrix<f64>], w: &DMatrix<f64>) -> Result<f64> {
    if !w.is_square() {
        return Err(Error::arg("joint diagonalizer must be square"));
    }
    let mut total = 0.0;
    for (k, c) in cs.iter().enumerate() {
        if c.shape() != w.shape() {
            return Err(Error::arg(format!(
                "C_{} is {:?}, expected {:?}",
                k + 1,
                c.shape(),
                w.shape()
            )));
        }
        let t = w.tr_mul(&(c * w));
        for (r, col) in (0..t.nrows()).flat_map(|r| (0..t.ncols()).map(move |c| (r, c))) {
            if r != col {
                total += t[(r, col)] * t[(r, col)];
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct JointDiagonalization {
    cs: Vec<DMatrix<f64>>,
    p: usize,
}

impl JointDiagonalization {
    pub fn new(cs: Vec<DMatrix<f64>>) -> Result<Self> {
        let p = cs.first().map(|c| c.nrows()).ok_or_else(|| Error::arg("no matrices"))?;
        for (k, c) in cs.iter().enumerate() {
            check_symmetric(c, &format!("C_{}", k + 1))?;
            if c.nrows() != p {
                return Err(Error::arg("all C_k must share one size"));
            }
        }
        Ok(Self { cs, p })
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.cs
    }
}

impl Objective for JointDiagonalization {
    fn name(&self) -> &str {
        "ojd"
    }
    fn dims(&self) -> (usize, usize) {
        (self.p, self.p)
    }
    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        ojd_offdiag(&self.cs, q.matrix())
    }
}

// ---------------------------------------------------------------------------
// Rayleigh-Ritz

/// `tr(Q^T H Q)`.
pub fn rayleigh_ritz(h: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(h, "H")?;
    check_rows(q, h.nrows(), "rayleigh_ritz")?;
    Ok(trace_form(h, q))
}

fn trace_form(h: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let hq = h * q;
    q.iter().zip(hq.iter()).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone)]
pub struct RayleighRitz {
    h: DMatrix<f64>,
    d: usize,
}

impl RayleighRitz {
    pub fn new(h: DMatrix<f64>, d: usize) -> Result<Self> {
        check_symmetric(&h, "H")?;
        if d == 0 || d > h.nrows() {
            return Err(Error::arg(format!("need 1 <= d <= p = {}", h.nrows())));
        }
        Ok(Self { h, d })
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.h
    }
}

impl Objective for RayleighRitz {
    fn name(&self) -> &str {
        "rritz"
    }
    fn dims(&self) -> (usize, usize) {
        (self.h.nrows(), self.d)
    }
    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        Ok(trace_form(&self.h, q.matrix()))
    }
}

// ---------------------------------------------------------------------------
// Supervised sparse PCA

/// Euclidean norms of the rows of `q`.
pub fn row_norms(q: &DMatrix<f64>) -> Vec<f64> {
    q.row_iter().map(|r| r.norm()).collect()
}

/// Within-class scatter of the rows of `z` around their class means.
pub fn fisher_loss(z: &DMatrix<f64>, y: &[u8]) -> Result<f64> {
    if y.len() != z.nrows() {
        return Err(Error::arg(format!(
            "{} labels for {} samples",
            y.len(),
            z.nrows()
        )));
    }
    let mut total = 0.0;
    for class in [0u8, 1u8] {
        let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if rows.is_empty() {
            return Err(Error::arg(format!("class {class} is empty")));
        }
        let mut mean = vec![0.0; z.ncols()];
        for &i in &rows {
            for (c, m) in mean.iter_mut().enumerate() {
                *m += z[(i, c)];
            }
        }
        mean.iter_mut().for_each(|m| *m /= rows.len() as f64);
        for &i in &rows {
            for (c, m) in mean.iter().enumerate() {
                total += (z[(i, c)] - m).powi(2);
            }
        }
    }
    Ok(total)
}

/// The three terms of the supervised sparse PCA objective, unweighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpcaTerms {
    pub reconstruction: f64,
    pub row_sparsity: f64,
    pub fisher: f64,
}

impl SpcaTerms {
    pub fn compute(x: &DMatrix<f64>, y: &[u8], q: &DMatrix<f64>, with_fisher: bool) -> Result<Self> {
        check_rows(q, x.ncols(), "supervised_spca")?;
        if y.len() != x.nrows() {
            return Err(Error::arg(format!("{} labels for {} samples", y.len(), x.nrows())));
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::arg("labels must be 0 or 1"));
        }
        let xq = x * q;
        let reconstruction = (x - &xq * q.transpose()).norm_squared();
        let row_sparsity = row_norms(q).iter().sum();
        let fisher = if with_fisher { fisher_loss(&xq, y)? } else { 0.0 };
        Ok(Self {
            reconstruction,
            row_sparsity,
            fisher,
        })
    }
}

/// `||X - X Q Q^T||_F^2 + lambda1 ||Q||_{2,1} + lambda2 L_Fisher(XQ, Y)`.
pub fn supervised_spca(
    x: &DMatrix<f64>,
    y: &[u8],
    lambda1: f64,
    lambda2: f64,
    q: &DMatrix<f64>,
) -> Result<f64> {
    if lambda1 < 0.0 || lambda2 < 0.0 {
        return Err(Error::arg("penalty weights must be non-negative"));
    }
    let t = SpcaTerms::compute(x, y, q, lambda2 > 0.0)?;
    Ok(t.reconstruction + lambda1 * t.row_sparsity + lambda2 * t.fisher)
}

#[derive(Debug, Clone)]
pub struct SupervisedSpca {
    x: DMatrix<f64>,
    y: Vec<u8>,
    lambda1: f64,
    lambda2: f64,
    d: usize,
}

impl SupervisedSpca {
    pub fn new(x: DMatrix<f64>, y: Vec<u8>, lambda1: f64, lambda2: f64, d: usize) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::arg(format!("{} labels for {} samples", y.len(), x.nrows())));
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::arg("labels must be 0 or 1"));
        }
        if lambda1 < 0.0 || lambda2 < 0.0 {
            return Err(Error::arg("penalty weights must be non-negative"));
        }
        if lambda2 > 0.0 && !(y.contains(&0) && y.contains(&1)) {
            return Err(Error::arg("Fisher term needs both classes present"));
        }
        if d == 0 || d > x.ncols() {
            return Err(Error::arg(format!("need 1 <= d <= p = {}", x.ncols())));
        }
        Ok(Self {
            x,
            y,
            lambda1,
            lambda2,
            d,
        })
    }

    pub fn data(&self) -> (&DMatrix<f64>, &[u8]) {
        (&self.x, &self.y)
    }
}

impl Objective for SupervisedSpca {
    fn name(&self) -> &str {
        "sspca"
    }
    fn dims(&self) -> (usize, usize) {
        (self.x.ncols(), self.d)
    }
    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        supervised_spca(&self.x, &self.y, self.lambda1, self.lambda2, q.matrix())
    }
}
