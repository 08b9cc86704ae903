//! Objective functions on St(p, d), all under a minimization convention.
//!
//! Problems that are naturally maximized (heterogeneous quadratic forms,
//! the ICA log-cosh contrast, the Varimax criterion) return the negated value.

mod benchmarks;
mod problems;

pub use benchmarks::{
    ackley, griewank, modified_benchmark, rastrigin, rosenbrock, BenchmarkKind, ModifiedBenchmark,
};
pub use problems::{
    default_lr_lambda, fisher_loss, hetero_quadratic, ica_logcosh, log_cosh, lr_sparse,
    ojd_offdiag, rayleigh_ritz, row_norms, supervised_spca, varimax, varimax_neg, HeteroQuadratic,
    IcaLogCosh, JointDiagonalization, LowRankSparse, RayleighRitz, SpcaTerms, SupervisedSpca,
    VarimaxRotation,
};

use crate::error::Result;
use crate::stiefel::StiefelPoint;

/// Evaluation contract used by the optimizer.
///
/// Implementations must be safe to call concurrently on distinct points and
/// must be deterministic: the same point always yields the same value.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    /// Required `(p, d)` of the argument.
    fn dims(&self) -> (usize, usize);

    /// Value at `q`. An `Err` or a non-finite value marks a failed evaluation.
    fn evaluate(&self, q: &StiefelPoint) -> Result<f64>;
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    name: String,
    dims: (usize, usize),
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&StiefelPoint) -> Result<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, p: usize, d: usize, f: F) -> Self {
        Self {
            name: name.into(),
            dims: (p, d),
            f,
        }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&StiefelPoint) -> Result<f64> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        (self.f)(q)
    }
}

impl<T: Objective + ?Sized> Objective for std::sync::Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn dims(&self) -> (usize, usize) {
        (**self).dims()
    }

    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        (**self).evaluate(q)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn dims(&self) -> (usize, usize) {
        (**self).dims()
    }

    fn evaluate(&self, q: &StiefelPoint) -> Result<f64> {
        (**self).evaluate(q)
    }
}
