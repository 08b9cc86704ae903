//! Classical test functions lifted to square orthogonal matrices.
//!
//! For `O` in St(p, p) the diagonal `x_D` and the off-diagonal entries `x_OD`
//! (row-major, skipping the diagonal) each go through the same base function.
//! Ackley, Griewank and Rastrigin see `10 (x_D - 1)` and `10 x_OD`; Rosenbrock
//! sees `x_D` and `x_OD + 1`. Every variant is zero at the identity.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{Error, Result};
use crate::stiefel::StiefelPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkKind {
    Ackley,
    Griewank,
    Rosenbrock,
    Rastrigin,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 4] = [
        BenchmarkKind::Ackley,
        BenchmarkKind::Griewank,
        BenchmarkKind::Rosenbrock,
        BenchmarkKind::Rastrigin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkKind::Ackley => "ackley",
            BenchmarkKind::Griewank => "griewank",
            BenchmarkKind::Rosenbrock => "rosenbrock",
            BenchmarkKind::Rastrigin => "rastrigin",
        }
    }

    fn base(self, x: &[f64]) -> f64 {
        match self {
            BenchmarkKind::Ackley => ackley(x),
            BenchmarkKind::Griewank => griewank(x),
            BenchmarkKind::Rosenbrock => rosenbrock(x),
            BenchmarkKind::Rastrigin => rastrigin(x),
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ackley" => Ok(BenchmarkKind::Ackley),
            "griewank" => Ok(BenchmarkKind::Griewank),
            "rosenbrock" => Ok(BenchmarkKind::Rosenbrock),
            "rastrigin" => Ok(BenchmarkKind::Rastrigin),
            other => Err(Error::arg(format!("unknown benchmark '{other}'"))),
        }
    }
}

/// Ackley; the empty vector maps to 0.
pub fn ackley(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

pub fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let prod: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    sum - prod + 1.0
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

pub fn modified_benchmark(kind: BenchmarkKind, o: &DMatrix<f64>) -> Result<f64> {
    let (p, c) = o.shape();
    if p != c {
        return Err(Error::arg(format!(
            "modified benchmarks need a square matrix, got {p}x{c}"
        )));
    }
    let mut diag = Vec::with_capacity(p);
    let mut off = Vec::with_capacity(p * p.saturating_sub(1));
    for r in 0..p {
        for col in 0..p {
            let v = o[(r, col)];
            if r == col {
                diag.push(v);
            } else {
                off.push(v);
            }
        }
    }
    match kind {
        BenchmarkKind::Rosenbrock => {
            off.iter_mut().for_each(|v| *v += 1.0);
        }
        _ => {
            diag.iter_mut().for_each(|v| *v = 10.0 * (*v - 1.0));
            off.iter_mut().for_each(|v| *v *= 10.0);
        }
    }
    Ok(kind.base(&diag) + kind.base(&off))
}

/// [`modified_benchmark`] as an [`Objective`] on St(p, p).
#[derive(Debug, Clone)]
pub struct ModifiedBenchmark {
    kind: BenchmarkKind,
    p: usize,
}

impl ModifiedBenchmark {
    pub fn new(kind: BenchmarkKind, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::arg("benchmark dimension must be positive"));
        }
        Ok(Self { kind, p })
    }

    pub fn kind(&self) -> BenchmarkKind {
        self.kind
    }
}

impl Objective for ModifiedBenchmark {
    fn name(&self) -> &str {
        self.kind.as_str()
    }

    fn dims(&self) -> (usize, usize) {
        (self.p, self.p)
    }

    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        modified_benchmark(self.kind, q.matrix())
    }
}
