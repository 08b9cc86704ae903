use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::stiefel::{givens_apply, num_planes, pair_index, GivensMove, StiefelPoint};

/// Result of polling every candidate rotation of one incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub best_move: GivensMove,
    pub best_value: f64,
    /// 1-based candidate index of the winner (smallest index on ties).
    pub best_k: usize,
    pub evaluations: usize,
    /// 1-based indices of candidates whose evaluation failed or was non-finite.
    pub failed: Vec<usize>,
}

/// The `k`-th candidate (1-based): plane `pair_index(ceil(k/2))`, angle
/// `-s` for odd `k` and `+s` for even `k`.
pub fn candidate_move(k: usize, p: usize, s: f64) -> Result<GivensMove> {
    let (i, j) = pair_index(k.div_ceil(2), p)?;
    let theta = if k % 2 == 1 { -s } else { s };
    Ok(GivensMove { i, j, theta })
}

/// Runs candidate evaluations, serially or on a private thread pool.
pub struct Evaluator {
    pool: Option<ThreadPool>,
}

impl Evaluator {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::arg("workers must be at least 1"));
        }
        let pool = if workers == 1 {
            None
        } else {
            let pool = ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("booom-eval-{i}"))
                .build()
                .map_err(|e| Error::arg(format!("cannot start evaluator pool: {e}")))?;
            Some(pool)
        };
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// Values for a batch of points, in input order. Failures become `None`.
    fn evaluate_all(&self, objective: &dyn Objective, points: &[StiefelPoint]) -> Vec<Option<f64>> {
        let eval = |q: &StiefelPoint| match objective.evaluate(q) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                log::warn!("objective '{}' returned non-finite value {v}", objective.name());
                None
            }
            Err(e) => {
                log::warn!("objective '{}' failed: {e}", objective.name());
                None
            }
        };
        match &self.pool {
            None => points.iter().map(eval).collect(),
            Some(pool) => pool.install(|| points.par_iter().map(eval).collect()),
        }
    }

    pub fn sweep(&self, objective: &dyn Objective, q: &StiefelPoint, s: f64) -> Result<SweepOutcome> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::arg("sweep step must be positive and finite"));
        }
        let p = q.p();
        let total = 2 * num_planes(p);
        if total == 0 {
            return Err(Error::arg("p = 1 has no rotation planes"));
        }
        let moves = (1..=total)
            .map(|k| candidate_move(k, p, s))
            .collect::<Result<Vec<_>>>()?;
        let candidates = moves
            .iter()
            .map(|&mv| givens_apply(q, mv))
            .collect::<Result<Vec<_>>>()?;
        let values = self.evaluate_all(objective, &candidates);

        let mut best: Option<(usize, f64)> = None;
        let mut failed = Vec::new();
        for (idx, v) in values.iter().enumerate() {
            match *v {
                Some(v) => {
                    if best.is_none_or(|(_, b)| v < b) {
                        best = Some((idx, v));
                    }
                }
                None => failed.push(idx + 1),
            }
        }
        let (idx, best_value) = best.ok_or(Error::AllCandidatesFailed(total))?;
        Ok(SweepOutcome {
            best_move: moves[idx],
            best_value,
            best_k: idx + 1,
            evaluations: total,
            failed,
        })
    }
}

/// Polls all `2 C(p,2)` rotations of `q` by `±s` and returns the best.
///
/// Non-finite or failed evaluations count as `+inf`; the sweep only fails if
/// every candidate does. The outcome does not depend on `workers`.
pub fn sweep(objective: &dyn Objective, q: &StiefelPoint, s: f64, workers: usize) -> Result<SweepOutcome> {
    Evaluator::new(workers)?.sweep(objective, q, s)
}
