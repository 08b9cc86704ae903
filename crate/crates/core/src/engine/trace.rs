use serde::{Deserialize, Serialize};

use crate::stiefel::GivensMove;

/// One iteration of one run. Serialized flat, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub run: usize,
    pub iter: usize,
    /// Step size polled in this iteration.
    pub step: f64,
    /// Incumbent value after the iteration.
    pub f: f64,
    pub accepted: bool,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub theta: Option<f64>,
    pub reortho: bool,
}

impl TraceRecord {
    pub fn accepted_move(&self) -> Option<GivensMove> {
        match (self.i, self.j, self.theta) {
            (Some(i), Some(j), Some(theta)) => Some(GivensMove { i, j, theta }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    StepFloor,
    IterCap,
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tau2Converged,
    MaxRuns,
    Budget,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    /// Why each run ended, indexed by run - 1.
    pub terminal_reasons: Vec<TerminalReason>,
    /// Largest orthonormality error seen on an incumbent before any repair.
    pub max_drift: f64,
    pub repairs: usize,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records_for_run(&self, run: usize) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.run == run)
    }

    pub fn min_incumbent(&self) -> Option<f64> {
        self.records.iter().map(|r| r.f).reduce(f64::min)
    }
}
