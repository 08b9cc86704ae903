//! Sparsity against misclassification for supervised sparse PCA over a grid
//! of penalty weights.

use booom::objectives::row_norms;
use booom::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Row norms at or below this count as zero.
pub const ACTIVE_ROW_TOL: f64 = 1e-6;

/// Fraction of rows of `q` with norm above [`ACTIVE_ROW_TOL`].
pub fn sparsity(q: &DMatrix<f64>) -> f64 {
    let norms = row_norms(q);
    norms.iter().filter(|&&v| v > ACTIVE_ROW_TOL).count() as f64 / norms.len() as f64
}

/// Training error of the nearest-class-mean rule on the rows of `z`.
pub fn misclassification(z: &DMatrix<f64>, y: &[u8]) -> Result<f64> {
    if y.len() != z.nrows() || y.is_empty() {
        return Err(Error::InvalidArgument(format!("{} labels for {} samples", y.len(), z.nrows())));
    }
    let mut means = [vec![0.0; z.ncols()], vec![0.0; z.ncols()]];
    let mut counts = [0usize; 2];
    for (row, &label) in z.row_iter().zip(y) {
        let c = usize::from(label);
        if c > 1 {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        counts[c] += 1;
        for (m, v) in means[c].iter_mut().zip(row.iter()) {
            *m += v;
        }
    }
    if counts.contains(&0) {
        return Err(Error::InvalidArgument("both classes must be present".into()));
    }
    for c in 0..2 {
        means[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
    }
    let dist = |row: &[f64], m: &[f64]| row.iter().zip(m).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let wrong = z
        .row_iter()
        .zip(y)
        .filter(|(row, &label)| {
            let r: Vec<f64> = row.iter().copied().collect();
            let predicted = u8::from(dist(&r, &means[1]) < dist(&r, &means[0]));
            predicted != label
        })
        .count();
    Ok(wrong as f64 / y.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub sparsity: f64,
    pub misclassification: f64,
    pub objective: f64,
    pub reconstruction: f64,
    pub pareto: bool,
}

/// `a` dominates `b`: no worse on both axes and strictly better on one.
pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Flags rows not dominated by any other row on (sparsity, misclassification).
pub fn mark_pareto(rows: &mut [ParetoRow]) {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.sparsity, r.misclassification)).collect();
    for (i, row) in rows.iter_mut().enumerate() {
        row.pareto = !points.iter().enumerate().any(|(j, &o)| j != i && dominates(o, points[i]));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub rank: usize,
    /// 1-based variable index.
    pub variable: usize,
    pub score: f64,
}

/// Variables ranked by the norm of their row in `q`, largest first.
pub fn importance_ranking(q: &DMatrix<f64>) -> Vec<ImportanceRow> {
    let norms = row_norms(q);
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .enumerate()
        .map(|(r, i)| ImportanceRow { rank: r + 1, variable: i + 1, score: norms[i] })
        .collect()
}
