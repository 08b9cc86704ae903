//! Multi-run pattern search over plane-wise rotations.
//!
//! Each iteration polls all `2 C(p,2)` rotations of the incumbent by `±s`,
//! moves to the best one on strict improvement, and shrinks `s` by `rho`
//! whenever the incumbent value changed by less than `tau1`. A run ends when
//! `s <= phi`; runs are chained (warm-started from the best point, step reset)
//! until two consecutive runs differ by less than `tau2`.

mod booom;
mod box_rmps;
mod sweep;
mod trace;

use std::f64::consts::PI;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use booom::{optimize, run, BooomResult, RunOutcome};
pub use box_rmps::{box_rmps, BoxRmpsResult};
pub use sweep::{candidate_move, sweep, Evaluator, SweepOutcome};
pub use trace::{RunTrace, StopReason, TerminalReason, TraceRecord};

use crate::error::{Error, Result};

/// Orthonormality drift above which the incumbent is repaired.
pub const REPAIR_THRESHOLD: f64 = 1e-9;

/// How runs after the first choose their starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RestartPolicy {
    /// Start from the best point found so far.
    #[default]
    Warm,
    /// Start from a fresh uniform random point.
    Cold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BooomConfig {
    pub s_initial: f64,
    pub rho: f64,
    pub phi: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub max_iter: usize,
    pub max_runs: usize,
    pub seed: u64,
    pub workers: usize,
    /// Per-optimization wall-clock limit, checked between sweeps.
    pub wall_clock_budget: Option<Duration>,
    pub restart: RestartPolicy,
}

impl Default for BooomConfig {
    fn default() -> Self {
        Self {
            s_initial: PI,
            rho: 2.0,
            phi: 1e-6,
            tau1: 1e-8,
            tau2: 1e-8,
            max_iter: 10_000,
            max_runs: 10,
            seed: 0,
            workers: 1,
            wall_clock_budget: None,
            restart: RestartPolicy::Warm,
        }
    }
}

impl BooomConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::arg(msg.to_string()));
        if !(self.phi > 0.0) || !self.phi.is_finite() {
            return bad("phi must be a positive finite number");
        }
        if !(self.s_initial > self.phi) || !self.s_initial.is_finite() {
            return bad("s_initial must exceed phi");
        }
        if !(self.rho > 1.0) || !self.rho.is_finite() {
            return bad("rho must be greater than 1");
        }
        if !(self.tau1 > 0.0) || !(self.tau2 > 0.0) {
            return bad("tau1 and tau2 must be positive");
        }
        if self.max_iter == 0 || self.max_runs == 0 {
            return bad("max_iter and max_runs must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }
}
