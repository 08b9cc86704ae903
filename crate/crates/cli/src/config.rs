//! Experiment configuration: a flat TOML file of documented keys.
//!
//! Unknown keys are rejected. `BOOOM_WORKERS` in the environment overrides
//! `workers`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use booom::engine::{BooomConfig, RestartPolicy};
use booom::objectives::BenchmarkKind;
use booom::synth::{GenParams, PsdPattern};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const WORKERS_ENV: &str = "BOOOM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One of hetquad, lrsparse, ica, varimax, ojd, rritz, sspca, ackley,
    /// griewank, rosenbrock, rastrigin, external.
    pub objective: String,
    pub p: usize,
    pub d: usize,

    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default = "one")]
    pub replicate_parallelism: usize,

    // Generator parameters.
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub sigma: Option<f64>,
    pub pattern: Option<PsdPattern>,
    pub d_signal: Option<usize>,
    pub spectrum: Option<Vec<f64>>,

    /// Data files in matrix text format; replace the generator when present.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    /// One 0/1 label per line, for sspca with `inputs`.
    pub labels: Option<PathBuf>,
    /// Starting point for the first run, in matrix text format.
    pub init: Option<PathBuf>,

    // Objective weights.
    pub lambda: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    #[serde(default)]
    pub lambda1_grid: Vec<f64>,
    #[serde(default)]
    pub lambda2_grid: Vec<f64>,

    // Search settings; unset keys keep the engine defaults.
    pub s_initial: Option<f64>,
    pub rho: Option<f64>,
    pub phi: Option<f64>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_runs: Option<usize>,
    pub workers: Option<usize>,
    pub budget_seconds: Option<f64>,
    pub restart: Option<RestartPolicy>,

    #[serde(default)]
    pub external_command: Vec<String>,
    pub external_timeout: Option<f64>,
    pub external_max_restarts: Option<usize>,

    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub report_format: ReportFormat,
}

fn one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Worker count from `BOOOM_WORKERS`, if set.
pub fn workers_override() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

const STRUCTURED: [&str; 7] = ["hetquad", "lrsparse", "ica", "varimax", "ojd", "rritz", "sspca"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates `path`; relative paths inside the file are
    /// resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        self.inputs.iter_mut().for_each(fix);
        self.labels.iter_mut().for_each(fix);
        self.init.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
    }

    pub fn benchmark_kind(&self) -> Option<BenchmarkKind> {
        self.objective.parse().ok()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        let name = self.objective.as_str();
        let known = STRUCTURED.contains(&name) || self.benchmark_kind().is_some() || name == "external";
        if !known {
            return fail(format!("unknown objective '{name}'"));
        }
        if self.p < 2 {
            return fail(format!("p must be at least 2, got {}", self.p));
        }
        if self.d == 0 || self.d > self.p {
            return fail(format!("d must satisfy 1 <= d <= p, got d = {} and p = {}", self.d, self.p));
        }
        let square = self.benchmark_kind().is_some() || matches!(name, "ica" | "varimax" | "ojd");
        if square && self.d != self.p {
            return fail(format!("objective '{name}' needs d = p, got d = {} and p = {}", self.d, self.p));
        }
        if self.replicates == 0 || self.replicate_parallelism == 0 {
            return fail("replicates and replicate_parallelism must be at least 1".into());
        }
        if name == "external" {
            if self.external_command.is_empty() {
                return fail("objective 'external' needs external_command".into());
            }
            if self.external_timeout.is_some_and(|t| !(t > 0.0)) {
                return fail("external_timeout must be positive".into());
            }
        }
        if self.budget_seconds.is_some_and(|b| !(b >= 0.0) || !b.is_finite()) {
            return fail("budget_seconds must be a finite non-negative number".into());
        }
        if self.lambda1_grid.iter().chain(&self.lambda2_grid).any(|v| !(*v >= 0.0)) {
            return fail("lambda grids must be non-negative".into());
        }
        if self.labels.is_some() && name != "sspca" {
            return fail("labels are only used by sspca".into());
        }
        self.booom_config(0).map(|_| ())
    }

    /// Engine settings for one replicate.
    pub fn booom_config(&self, seed: u64) -> Result<BooomConfig, CliError> {
        let base = BooomConfig::default();
        let workers = workers_override()?.or(self.workers).unwrap_or(base.workers);
        let cfg = BooomConfig {
            s_initial: self.s_initial.unwrap_or(base.s_initial),
            rho: self.rho.unwrap_or(base.rho),
            phi: self.phi.unwrap_or(base.phi),
            tau1: self.tau1.unwrap_or(base.tau1),
            tau2: self.tau2.unwrap_or(base.tau2),
            max_iter: self.max_iter.unwrap_or(base.max_iter),
            max_runs: self.max_runs.unwrap_or(base.max_runs),
            seed,
            workers,
            wall_clock_budget: self.budget_seconds.map(Duration::from_secs_f64),
            restart: self.restart.unwrap_or(base.restart),
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Generator parameters for structured objectives without input files.
    pub fn gen_params(&self) -> Result<GenParams, CliError> {
        let need = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| CliError::Config(format!("objective '{}' needs '{key}'", self.objective)))
        };
        let (p, d) = (self.p, self.d);
        Ok(match self.objective.as_str() {
            "hetquad" => GenParams::Hetquad { pattern: self.pattern.unwrap_or(PsdPattern::Random), p, d },
            "lrsparse" => GenParams::Lrsparse { n: need(self.n, "n")?, p, d },
            "ica" => GenParams::Ica { p, n: need(self.n, "n")? },
            "varimax" => GenParams::Varimax { n: need(self.n, "n")?, p },
            "ojd" => GenParams::Ojd { p, m: need(self.m, "m")?, sigma: self.sigma.unwrap_or(0.1) },
            "rritz" => GenParams::Rritz { p, spectrum: self.spectrum.clone() },
            "sspca" => GenParams::Sspca {
                n: need(self.n, "n")?,
                p,
                d_signal: self.d_signal.unwrap_or(d),
            },
            other => return Err(CliError::Config(format!("objective '{other}' has no generator"))),
        })
    }
}
