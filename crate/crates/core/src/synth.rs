//! Seeded generators for every synthetic problem family.
//!
//! Each generator is a pure function of its parameters and the RNG state, so
//! `generate(params, seed)` reproduces an instance bit for bit.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal, StudentT, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::stiefel::random_stiefel;

/// Probability that an entry of the sparse corruption is nonzero.
pub const SPARSE_DENSITY: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsdPattern {
    Random,
    Toeplitz,
    BlockDiag,
}

impl std::str::FromStr for PsdPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PsdPattern::Random),
            "toeplitz" => Ok(PsdPattern::Toeplitz),
            "blockdiag" => Ok(PsdPattern::BlockDiag),
            other => Err(Error::arg(format!("unknown PSD pattern '{other}'"))),
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // Fill column by column so the draw order matches storage order.
    DMatrix::from_iterator(rows, cols, (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `m_{jk} = rho^{|j-k|}`.
pub fn toeplitz_matrix(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |j, k| rho.powi(j.abs_diff(k) as i32))
}

/// Random correlation matrix: Gram matrix of unit-normalized Gaussian columns.
fn random_correlation<R: Rng + ?Sized>(size: usize, rng: &mut R) -> DMatrix<f64> {
    let mut z = gaussian(size, size, rng);
    for mut col in z.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    let mut c = symmetrize(&z.tr_mul(&z));
    c.fill_diagonal(1.0);
    c
}

/// Sizes of `blocks` contiguous blocks covering `p`, as equal as possible.
pub fn block_sizes(p: usize, blocks: usize) -> Vec<usize> {
    (0..blocks).map(|b| p / blocks + usize::from(b < p % blocks)).collect()
}

/// `d` positive semidefinite `p x p` matrices following `pattern`.
pub fn gen_psd_set<R: Rng + ?Sized>(pattern: PsdPattern, p: usize, d: usize, rng: &mut R) -> Result<Vec<DMatrix<f64>>> {
    if p < 2 || d < 1 {
        return Err(Error::arg("PSD set needs p >= 2 and d >= 1"));
    }
    if pattern == PsdPattern::BlockDiag && p < 5 {
        return Err(Error::arg("block-diagonal pattern needs p >= 5 for five blocks"));
    }
    let mut out = Vec::with_capacity(d);
    for _ in 0..d {
        let m = match pattern {
            PsdPattern::Random => {
                let a = gaussian(p, p, rng);
                symmetrize(&a.tr_mul(&a))
            }
            PsdPattern::Toeplitz => {
                let rho: f64 = rng.sample(Uniform::new(0.0, 1.0).expect("valid range"));
                toeplitz_matrix(p, rho)
            }
            PsdPattern::BlockDiag => {
                let mut m = DMatrix::zeros(p, p);
                let mut offset = 0;
                for size in block_sizes(p, 5) {
                    let c = random_correlation(size, rng);
                    m.view_mut((offset, offset), (size, size)).copy_from(&c);
                    offset += size;
                }
                m
            }
        };
        out.push(m);
    }
    Ok(out)
}

/// Diagonal of the low-rank factor: linear from 2 down to 1.
pub fn lowrank_spectrum(d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![2.0];
    }
    (1..=d).map(|k| 1.0 + (d - k) as f64 / (d - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowRankSparseData {
    pub x: DMatrix<f64>,
    pub low_rank: DMatrix<f64>,
    pub sparse: DMatrix<f64>,
}

pub fn gen_lowrank_sparse<R: Rng + ?Sized>(n: usize, p: usize, d: usize, rng: &mut R) -> Result<LowRankSparseData> {
    if d == 0 || d > n.min(p) {
        return Err(Error::arg(format!("need 1 <= d <= min(n, p) = {}", n.min(p))));
    }
    let a = gaussian(n, p, rng);
    let svd = a.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let scale = DMatrix::from_diagonal(&DVector::from_vec(lowrank_spectrum(d)));
    let low_rank = u.columns(0, d) * scale * v_t.rows(0, d);

    let cauchy = Cauchy::new(0.0, 1.0).expect("valid scale");
    let mut sparse = DMatrix::zeros(n, p);
    for v in sparse.iter_mut() {
        let value: f64 = cauchy.sample(rng);
        if rng.random_bool(SPARSE_DENSITY) {
            *v = value;
        }
    }
    let x = &low_rank + &sparse;
    Ok(LowRankSparseData { x, low_rank, sparse })
}

fn standardize_row(row: &mut [f64]) {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    row.iter_mut().for_each(|v| *v -= mean);
    let sd = (row.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    row.iter_mut().for_each(|v| *v /= sd);
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaData {
    pub x: DMatrix<f64>,
    pub mixing: DMatrix<f64>,
    pub sources: DMatrix<f64>,
    pub whitened: DMatrix<f64>,
    pub whitener: DMatrix<f64>,
}

/// `p` sources over `n` samples cycling Laplace, Student-t(3) and uniform,
/// mixed by a matrix with log-spaced singular values on [1, 10], then
/// centered and whitened.
pub fn gen_ica<R: Rng + ?Sized>(p: usize, n: usize, rng: &mut R) -> Result<IcaData> {
    if p < 2 {
        return Err(Error::arg("ICA needs at least two sources"));
    }
    if n <= p {
        return Err(Error::arg(format!("ICA needs more samples than sources (n = {n}, p = {p})")));
    }
    let unit = Uniform::new(-0.5, 0.5).expect("valid range");
    let student = StudentT::new(3.0).expect("valid dof");
    let flat = Uniform::new_inclusive(-(3.0f64.sqrt()), 3.0f64.sqrt()).expect("valid range");
    let mut sources = DMatrix::zeros(p, n);
    for i in 0..p {
        let mut row: Vec<f64> = (0..n)
            .map(|_| match i % 3 {
                0 => {
                    // Laplace(0, 1) by inverse CDF.
                    let u: f64 = rng.sample(unit);
                    -u.signum() * (1.0 - 2.0 * u.abs()).ln()
                }
                1 => student.sample(rng),
                _ => rng.sample(flat),
            })
            .collect();
        standardize_row(&mut row);
        for (t, v) in row.into_iter().enumerate() {
            sources[(i, t)] = v;
        }
    }

    let u = random_stiefel(p, p, rng)?.into_matrix();
    let v = random_stiefel(p, p, rng)?.into_matrix();
    let spread = DVector::from_fn(p, |i, _| 10f64.powf(i as f64 / (p - 1) as f64));
    let mixing = &u * DMatrix::from_diagonal(&spread) * v.transpose();
    let x = &mixing * &sources;

    let (whitener, whitened) = whiten(&x)?;
    Ok(IcaData { x, mixing, sources, whitened, whitener })
}

/// Centers the rows of `x` and returns `(Lambda^{-1/2} E^T, whitened data)`
/// for the sample covariance `E Lambda E^T` (normalized by `n`).
pub fn whiten(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (p, n) = x.shape();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        let mean = row.sum() / n as f64;
        row.add_scalar_mut(-mean);
    }
    let cov = symmetrize(&(&centered * centered.transpose())) / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let mut whitener = DMatrix::zeros(p, p);
    for (r, &idx) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        if !(lambda > 1e-12 * top) {
            return Err(Error::RankDeficient);
        }
        let col = eig.eigenvectors.column(idx);
        whitener.row_mut(r).copy_from(&(col.transpose() / lambda.sqrt()));
    }
    let whitened = &whitener * centered;
    Ok((whitener, whitened))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarimaxData {
    pub a: DMatrix<f64>,
    pub b0: DMatrix<f64>,
    pub r_true: DMatrix<f64>,
}

/// Simple-structure loadings: one dominant loading per row with magnitude in
/// [0.8, 1.2] and a random sign, plus two small cross-loadings; columns are
/// normalized and the result is rotated by a random orthogonal matrix.
pub fn gen_varimax<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<VarimaxData> {
    if p < 3 {
        return Err(Error::arg("varimax generator needs p >= 3"));
    }
    if n == 0 {
        return Err(Error::arg("varimax generator needs n >= 1"));
    }
    let magnitude = Uniform::new(0.8, 1.2).expect("valid range");
    let mut b0 = DMatrix::zeros(n, p);
    for k in 0..n {
        let j = rng.random_range(0..p);
        let u: f64 = rng.sample(magnitude);
        let z: f64 = rng.sample(StandardNormal);
        b0[(k, j)] = if z < 0.0 { -u } else { u };
        for pick in sample(rng, p - 1, 2).iter() {
            let other = if pick >= j { pick + 1 } else { pick };
            let noise: f64 = rng.sample(StandardNormal);
            b0[(k, other)] = 0.05 * noise;
        }
    }
    for (c, mut col) in b0.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::arg(format!(
                "factor {} received no loadings; use more rows or another seed",
                c + 1
            )));
        }
        col /= norm;
    }
    let r_true = random_stiefel(p, p, rng)?.into_matrix();
    let a = &b0 * r_true.transpose();
    Ok(VarimaxData { a, b0, r_true })
}

/// Base diagonal for joint diagonalization: linear from 0.5 to 2.0.
pub fn ojd_base_diagonal(p: usize) -> Vec<f64> {
    (0..p).map(|i| 0.5 + 1.5 * i as f64 / (p - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OjdData {
    pub cs: Vec<DMatrix<f64>>,
    pub w_true: DMatrix<f64>,
    pub diagonals: Vec<DVector<f64>>,
}

pub fn gen_ojd<R: Rng + ?Sized>(p: usize, m: usize, sigma: f64, rng: &mut R) -> Result<OjdData> {
    if p < 2 || m < 1 {
        return Err(Error::arg("joint diagonalization needs p >= 2 and m >= 1"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::arg("noise level must be finite and non-negative"));
    }
    let w_true = random_stiefel(p, p, rng)?.into_matrix();
    let base = ojd_base_diagonal(p);
    let mut cs = Vec::with_capacity(m);
    let mut diagonals = Vec::with_capacity(m);
    for _ in 0..m {
        let dk = DVector::from_fn(p, |i, _| base[i] + 0.2 * rng.sample::<f64, _>(StandardNormal));
        let g = gaussian(p, p, rng);
        let noise = symmetrize(&g);
        let c = &w_true * DMatrix::from_diagonal(&dk) * w_true.transpose() + noise * sigma;
        cs.push(symmetrize(&c));
        diagonals.push(dk);
    }
    Ok(OjdData { cs, w_true, diagonals })
}

/// Default Hamiltonian spectrum: geometrically spaced offsets so that the
/// values run from -1 to 10 with most levels packed near the bottom.
pub fn default_hamiltonian_spectrum(p: usize) -> Vec<f64> {
    (0..p).map(|i| -2.0 + 12f64.powf(i as f64 / (p - 1) as f64)).collect()
}

/// `E diag(spectrum) E^T` for a random rotation `E`.
pub fn gen_reduced_hamiltonian<R: Rng + ?Sized>(p: usize, rng: &mut R, spectrum: Option<&[f64]>) -> Result<DMatrix<f64>> {
    if p < 2 {
        return Err(Error::arg("Hamiltonian needs p >= 2"));
    }
    let lambda = match spectrum {
        Some(s) if s.len() != p => {
            return Err(Error::arg(format!("spectrum has {} entries, expected {p}", s.len())));
        }
        Some(s) => s.to_vec(),
        None => default_hamiltonian_spectrum(p),
    };
    if lambda.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("spectrum must be finite"));
    }
    let e = random_stiefel(p, p, rng)?.into_matrix();
    let h = &e * DMatrix::from_diagonal(&DVector::from_vec(lambda)) * e.transpose();
    Ok(symmetrize(&h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoClassData {
    /// Standardized `n x p` design.
    pub x: DMatrix<f64>,
    pub y: Vec<u8>,
    /// The design before standardization.
    pub raw: DMatrix<f64>,
}

/// Two balanced Gaussian classes whose means differ by 2 on the first
/// `d_signal` coordinates; columns are standardized afterwards.
pub fn gen_two_class<R: Rng + ?Sized>(n: usize, p: usize, d_signal: usize, rng: &mut R) -> Result<TwoClassData> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::arg("two-class data needs an even n >= 4"));
    }
    if p == 0 || d_signal > p {
        return Err(Error::arg(format!("need p >= 1 and d_signal <= p, got p = {p}, d_signal = {d_signal}")));
    }
    let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let mut raw = gaussian(n, p, rng);
    for (i, &label) in y.iter().enumerate() {
        if label == 1 {
            for c in 0..d_signal {
                raw[(i, c)] += 2.0;
            }
        }
    }
    let x = standardize_columns(&raw)?;
    Ok(TwoClassData { x, y, raw })
}

/// Zero-mean, unit-variance columns (variance normalized by `n`).
pub fn standardize_columns(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows() as f64;
    let mut out = x.clone();
    for (c, mut col) in out.column_iter_mut().enumerate() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / n).sqrt();
        if !(sd > 0.0) {
            return Err(Error::arg(format!("column {} is constant", c + 1)));
        }
        col /= sd;
    }
    Ok(out)
}

/// Parameters for one generated instance; the `kind` tag names the matching objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GenParams {
    Hetquad { pattern: PsdPattern, p: usize, d: usize },
    Lrsparse { n: usize, p: usize, d: usize },
    Ica { p: usize, n: usize },
    Varimax { n: usize, p: usize },
    Ojd { p: usize, m: usize, sigma: f64 },
    Rritz { p: usize, spectrum: Option<Vec<f64>> },
    Sspca { n: usize, p: usize, d_signal: usize },
}

impl GenParams {
    pub fn kind(&self) -> &'static str {
        match self {
            GenParams::Hetquad { .. } => "hetquad",
            GenParams::Lrsparse { .. } => "lrsparse",
            GenParams::Ica { .. } => "ica",
            GenParams::Varimax { .. } => "varimax",
            GenParams::Ojd { .. } => "ojd",
            GenParams::Rritz { .. } => "rritz",
            GenParams::Sspca { .. } => "sspca",
        }
    }
}

/// A generated instance: named data matrices, optional labels and named
/// ground-truth matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub params: GenParams,
    pub seed: u64,
    pub data: BTreeMap<String, DMatrix<f64>>,
    pub labels: Option<Vec<u8>>,
    pub ground_truth: BTreeMap<String, DMatrix<f64>>,
}

impl ProblemInstance {
    pub fn kind(&self) -> &'static str {
        self.params.kind()
    }
}

fn named(items: impl IntoIterator<Item = (String, DMatrix<f64>)>) -> BTreeMap<String, DMatrix<f64>> {
    items.into_iter().collect()
}

fn indexed(prefix: &str, ms: Vec<DMatrix<f64>>) -> impl Iterator<Item = (String, DMatrix<f64>)> + '_ {
    ms.into_iter().enumerate().map(move |(k, m)| (format!("{prefix}{:03}", k + 1), m))
}

pub fn generate(params: &GenParams, seed: u64) -> Result<ProblemInstance> {
    let mut rng = seeded(seed);
    let mut labels = None;
    let (data, ground_truth) = match params {
        GenParams::Hetquad { pattern, p, d } => {
            let ms = gen_psd_set(*pattern, *p, *d, &mut rng)?;
            (named(indexed("M", ms)), BTreeMap::new())
        }
        GenParams::Lrsparse { n, p, d } => {
            let g = gen_lowrank_sparse(*n, *p, *d, &mut rng)?;
            (
                named([("X".into(), g.x)]),
                named([("L".into(), g.low_rank), ("S".into(), g.sparse)]),
            )
        }
        GenParams::Ica { p, n } => {
            let g = gen_ica(*p, *n, &mut rng)?;
            (
                named([("X".into(), g.x), ("Xw".into(), g.whitened), ("whitener".into(), g.whitener)]),
                named([("A".into(), g.mixing), ("sources".into(), g.sources)]),
            )
        }
        GenParams::Varimax { n, p } => {
            let g = gen_varimax(*n, *p, &mut rng)?;
            (named([("A".into(), g.a)]), named([("B0".into(), g.b0), ("R_true".into(), g.r_true)]))
        }
        GenParams::Ojd { p, m, sigma } => {
            let g = gen_ojd(*p, *m, *sigma, &mut rng)?;
            let ds = g.diagonals.iter().map(DMatrix::from_diagonal).collect();
            let mut truth = named(indexed("D", ds));
            truth.insert("W_true".into(), g.w_true);
            (named(indexed("C", g.cs)), truth)
        }
        GenParams::Rritz { p, spectrum } => {
            let h = gen_reduced_hamiltonian(*p, &mut rng, spectrum.as_deref())?;
            (named([("H".into(), h)]), BTreeMap::new())
        }
        GenParams::Sspca { n, p, d_signal } => {
            let g = gen_two_class(*n, *p, *d_signal, &mut rng)?;
            labels = Some(g.y);
            (named([("X".into(), g.x)]), named([("X_raw".into(), g.raw)]))
        }
    };
    Ok(ProblemInstance { params: params.clone(), seed, data, labels, ground_truth })
}
