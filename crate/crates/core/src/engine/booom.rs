use std::time::Instant;

use super::sweep::Evaluator;
use super::trace::{RunTrace, StopReason, TerminalReason, TraceRecord};
use super::{BooomConfig, RestartPolicy, REPAIR_THRESHOLD};
use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::rng::seeded;
use crate::stiefel::{random_stiefel, reorthonormalize, StiefelPoint, FEASIBILITY_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub q: StiefelPoint,
    pub f: f64,
    pub reason: TerminalReason,
    pub iterations: usize,
    pub evaluations: usize,
    pub failed_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BooomResult {
    pub q_best: StiefelPoint,
    pub f_best: f64,
    pub runs_completed: usize,
    /// Every objective call, including incumbent evaluations at run starts and after repairs.
    pub total_evaluations: usize,
    pub failed_evaluations: usize,
    pub trace: RunTrace,
    pub stop_reason: StopReason,
}

fn evaluate_incumbent(objective: &dyn Objective, q: &StiefelPoint) -> Result<f64> {
    let v = objective.evaluate(q)?;
    if !v.is_finite() {
        return Err(Error::Objective(format!(
            "objective '{}' returned {v} at the incumbent",
            objective.name()
        )));
    }
    Ok(v)
}

fn check_start(q: &StiefelPoint) -> Result<()> {
    let err = q.orthonormality_error();
    if err > FEASIBILITY_TOL {
        return Err(Error::Infeasible { error: err, tolerance: FEASIBILITY_TOL });
    }
    Ok(())
}

struct Runner<'a> {
    objective: &'a dyn Objective,
    cfg: &'a BooomConfig,
    evaluator: Evaluator,
    deadline: Option<Instant>,
}

impl Runner<'_> {
    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn run(&self, q0: StiefelPoint, run_index: usize, trace: &mut RunTrace) -> Result<RunOutcome> {
        check_start(&q0)?;
        let cfg = self.cfg;
        let mut q = q0;
        let mut f = evaluate_incumbent(self.objective, &q)?;
        let mut evaluations = 1;
        let mut failed_evaluations = 0;
        let mut s = cfg.s_initial;
        let mut h = 1;

        let reason = loop {
            if s <= cfg.phi {
                break TerminalReason::StepFloor;
            }
            if h > cfg.max_iter {
                break TerminalReason::IterCap;
            }
            if self.expired() {
                break TerminalReason::Budget;
            }

            let f_prev = f;
            let step = s;
            let outcome = self.evaluator.sweep(self.objective, &q, step)?;
            evaluations += outcome.evaluations;
            failed_evaluations += outcome.failed.len();

            let accepted = outcome.best_value < f_prev;
            let mut reortho = false;
            if accepted {
                q = q.rotated(outcome.best_move)?;
                f = outcome.best_value;
                let drift = q.orthonormality_error();
                trace.max_drift = trace.max_drift.max(drift);
                if drift > REPAIR_THRESHOLD {
                    log::info!("run {run_index} iter {h}: orthonormality drift {drift:.3e}, repairing");
                    q = reorthonormalize(q.matrix())?;
                    f = evaluate_incumbent(self.objective, &q)?;
                    evaluations += 1;
                    trace.repairs += 1;
                    reortho = true;
                }
            }

            // Compare consecutive incumbents, so a poll where every candidate is
            // far worse still counts as no progress.
            if h > 1 && (f_prev - f).abs() < cfg.tau1 && s > cfg.phi {
                s /= cfg.rho;
            }

            let mv = accepted.then_some(outcome.best_move);
            trace.records.push(TraceRecord {
                run: run_index,
                iter: h,
                step,
                f,
                accepted,
                i: mv.map(|m| m.i),
                j: mv.map(|m| m.j),
                theta: mv.map(|m| m.theta),
                reortho,
            });
            h += 1;
        };
        trace.terminal_reasons.push(reason);
        Ok(RunOutcome {
            q,
            f,
            reason,
            iterations: h - 1,
            evaluations,
            failed_evaluations,
        })
    }
}

/// One run from `q0` with the step starting at `cfg.s_initial`.
///
/// The run index is taken from the number of runs already in `trace`.
pub fn run(
    objective: &dyn Objective,
    q0: &StiefelPoint,
    cfg: &BooomConfig,
    trace: &mut RunTrace,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let runner = Runner {
        objective,
        cfg,
        evaluator: Evaluator::new(cfg.workers)?,
        deadline: cfg.wall_clock_budget.map(|b| Instant::now() + b),
    };
    let run_index = trace.terminal_reasons.len() + 1;
    runner.run(q0.clone(), run_index, trace)
}

/// Chains runs until consecutive run results differ by less than `tau2`,
/// `max_runs` is reached, or the wall-clock budget expires.
///
/// Without `init`, the first start is drawn uniformly from St(p, d) using
/// `cfg.seed`.
pub fn optimize(
    objective: &dyn Objective,
    cfg: &BooomConfig,
    init: Option<&StiefelPoint>,
    p: usize,
    d: usize,
) -> Result<BooomResult> {
    cfg.validate()?;
    if objective.dims() != (p, d) {
        let (op, od) = objective.dims();
        return Err(Error::arg(format!(
            "objective '{}' expects {op}x{od}, optimizer asked for {p}x{d}",
            objective.name()
        )));
    }
    if p < 2 {
        return Err(Error::arg("p must be at least 2"));
    }
    let mut rng = seeded(cfg.seed);
    let first = match init {
        Some(q) => {
            if (q.p(), q.d()) != (p, d) {
                return Err(Error::arg(format!(
                    "initial point is {}x{}, expected {p}x{d}",
                    q.p(),
                    q.d()
                )));
            }
            q.clone()
        }
        None => random_stiefel(p, d, &mut rng)?,
    };

    let runner = Runner {
        objective,
        cfg,
        evaluator: Evaluator::new(cfg.workers)?,
        deadline: cfg.wall_clock_budget.map(|b| Instant::now() + b),
    };
    let mut trace = RunTrace::new();
    let mut total_evaluations = 0;
    let mut failed_evaluations = 0;
    let mut best: Option<(StiefelPoint, f64)> = None;
    let mut prev_run_f: Option<f64> = None;
    let mut start = first;
    let mut runs_completed = 0;

    let stop_reason = loop {
        let outcome = runner.run(start, runs_completed + 1, &mut trace)?;
        runs_completed += 1;
        total_evaluations += outcome.evaluations;
        failed_evaluations += outcome.failed_evaluations;
        if best.as_ref().is_none_or(|(_, fb)| outcome.f < *fb) {
            best = Some((outcome.q.clone(), outcome.f));
        }
        log::debug!(
            "run {runs_completed}: f = {:.12e} after {} iterations ({:?})",
            outcome.f,
            outcome.iterations,
            outcome.reason
        );

        if outcome.reason == TerminalReason::Budget {
            break StopReason::Budget;
        }
        if prev_run_f.is_some_and(|prev| (outcome.f - prev).abs() < cfg.tau2) {
            break StopReason::Tau2Converged;
        }
        if runs_completed >= cfg.max_runs {
            break StopReason::MaxRuns;
        }
        prev_run_f = Some(outcome.f);
        start = match cfg.restart {
            RestartPolicy::Warm => best.as_ref().map(|(q, _)| q.clone()).unwrap_or(outcome.q),
            RestartPolicy::Cold => random_stiefel(p, d, &mut rng)?,
        };
    };

    let (q_best, f_best) = best.expect("at least one run completes");
    Ok(BooomResult {
        q_best,
        f_best,
        runs_completed,
        total_evaluations,
        failed_evaluations,
        trace,
        stop_reason,
    })
}
