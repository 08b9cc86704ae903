//! Turns a config into an objective plus the data and ground truth needed to
//! score the result.

use std::collections::BTreeMap;
use std::time::Duration;

use booom::metrics::{amari_distance, eig_ground_truth, kkt_residual, mae, signed_permutation_deviation, MetricReport};
use booom::objectives::{
    varimax, HeteroQuadratic, IcaLogCosh, JointDiagonalization, LowRankSparse, ModifiedBenchmark, RayleighRitz,
    SupervisedSpca, VarimaxRotation,
};
use booom::synth::{generate, whiten};
use booom::{Objective, StiefelPoint};
use nalgebra::DMatrix;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::external::{ExternalObjective, ExternalObjectiveSpec};
use crate::pareto::{misclassification, sparsity};
use crate::report::{read_labels, read_matrix_file};

pub struct Problem {
    pub objective: Box<dyn Objective>,
    pub data: BTreeMap<String, DMatrix<f64>>,
    pub labels: Option<Vec<u8>>,
    pub truth: BTreeMap<String, DMatrix<f64>>,
}

fn input_names(objective: &str, count: usize) -> Result<Vec<String>, CliError> {
    let single = |name: &str| {
        if count == 1 {
            Ok(vec![name.to_string()])
        } else {
            Err(CliError::Config(format!("objective '{objective}' takes exactly one input file, got {count}")))
        }
    };
    match objective {
        "hetquad" => Ok((1..=count).map(|k| format!("M{k:03}")).collect()),
        "ojd" => Ok((1..=count).map(|k| format!("C{k:03}")).collect()),
        "lrsparse" | "sspca" => single("X"),
        "ica" => single("X"),
        "varimax" => single("A"),
        "rritz" => single("H"),
        other => Err(CliError::Config(format!("objective '{other}' does not read input files"))),
    }
}

fn numbered(data: &BTreeMap<String, DMatrix<f64>>, prefix: char) -> Vec<DMatrix<f64>> {
    data.iter()
        .filter(|(k, _)| k.starts_with(prefix) && k[1..].chars().all(|c| c.is_ascii_digit()))
        .map(|(_, v)| v.clone())
        .collect()
}

fn take(data: &BTreeMap<String, DMatrix<f64>>, key: &str) -> Result<DMatrix<f64>, CliError> {
    data.get(key)
        .cloned()
        .ok_or_else(|| CliError::Runtime(format!("missing data matrix '{key}'")))
}

/// Builds the problem for one replicate; `seed` drives any generator.
pub fn build_problem(cfg: &ExperimentConfig, seed: u64, workers: usize) -> Result<Problem, CliError> {
    let name = cfg.objective.as_str();
    let (p, d) = (cfg.p, cfg.d);
    if let Some(kind) = cfg.benchmark_kind() {
        let objective = ModifiedBenchmark::new(kind, p).map_err(CliError::config)?;
        return Ok(Problem { objective: Box::new(objective), data: BTreeMap::new(), labels: None, truth: BTreeMap::new() });
    }
    if name == "external" {
        let spec = ExternalObjectiveSpec {
            command: cfg.external_command.clone(),
            timeout: Duration::from_secs_f64(cfg.external_timeout.unwrap_or(30.0)),
            max_restarts: cfg.external_max_restarts.unwrap_or(10),
        };
        let objective = ExternalObjective::new(spec, p, d, workers).map_err(|e| CliError::Runtime(e.to_string()))?;
        return Ok(Problem { objective: Box::new(objective), data: BTreeMap::new(), labels: None, truth: BTreeMap::new() });
    }

    let (data, labels, truth) = if cfg.inputs.is_empty() {
        let inst = generate(&cfg.gen_params()?, seed).map_err(CliError::config)?;
        (inst.data, inst.labels, inst.ground_truth)
    } else {
        let names = input_names(name, cfg.inputs.len())?;
        let mut data = BTreeMap::new();
        for (key, path) in names.into_iter().zip(&cfg.inputs) {
            data.insert(key, read_matrix_file(path)?);
        }
        let labels = match &cfg.labels {
            Some(path) => Some(read_labels(path)?),
            None if name == "sspca" => return Err(CliError::Config("sspca with input files needs 'labels'".into())),
            None => None,
        };
        if name == "ica" {
            let (whitener, xw) = whiten(&data["X"]).map_err(CliError::input)?;
            data.insert("Xw".into(), xw);
            data.insert("whitener".into(), whitener);
        }
        (data, labels, BTreeMap::new())
    };

    let objective: Box<dyn Objective> = match name {
        "hetquad" => Box::new(HeteroQuadratic::new(numbered(&data, 'M')).map_err(CliError::config)?),
        "lrsparse" => Box::new(LowRankSparse::new(take(&data, "X")?, cfg.lambda, d).map_err(CliError::config)?),
        "ica" => Box::new(IcaLogCosh::new(take(&data, "Xw")?).map_err(CliError::config)?),
        "varimax" => Box::new(VarimaxRotation::new(take(&data, "A")?).map_err(CliError::config)?),
        "ojd" => Box::new(JointDiagonalization::new(numbered(&data, 'C')).map_err(CliError::config)?),
        "rritz" => Box::new(RayleighRitz::new(take(&data, "H")?, d).map_err(CliError::config)?),
        "sspca" => {
            let y = labels.clone().ok_or_else(|| CliError::Config("sspca needs labels".into()))?;
            let obj = SupervisedSpca::new(take(&data, "X")?, y, cfg.lambda1.unwrap_or(0.0), cfg.lambda2.unwrap_or(0.0), d)
                .map_err(CliError::config)?;
            Box::new(obj)
        }
        other => return Err(CliError::Config(format!("unknown objective '{other}'"))),
    };
    if objective.dims() != (p, d) {
        let (op, od) = objective.dims();
        return Err(CliError::Config(format!(
            "data imply a {op}x{od} problem but the config says p = {p}, d = {d}"
        )));
    }
    Ok(Problem { objective, data, labels, truth })
}

impl Problem {
    /// Quality metrics for a solution, where the problem has a reference.
    pub fn metrics(&self, name: &str, q: &StiefelPoint, f_best: f64) -> Result<Vec<MetricReport>, CliError> {
        let qm = q.matrix();
        let mut out = Vec::new();
        let mut push = |r: booom::Result<MetricReport>| -> Result<(), CliError> {
            out.push(r.map_err(|e| CliError::Runtime(e.to_string()))?);
            Ok(())
        };
        match name {
            "rritz" => {
                let h = &self.data["H"];
                let (best, _) = eig_ground_truth(h, q.d())?;
                push(MetricReport::new("objective_gap", f_best - best).map(|r| r.with_baseline(0.0, None)))?;
                push(MetricReport::new("kkt_residual", kkt_residual(h, q)?))?;
            }
            "lrsparse" => {
                if let Some(l) = self.truth.get("L") {
                    let x = &self.data["X"];
                    push(MetricReport::new("mae", mae(&(x * qm * qm.transpose()), l)?))?;
                    let e = DMatrix::<f64>::identity(qm.nrows(), qm.ncols());
                    push(MetricReport::new("mae_identity_projector", mae(&(x * &e * e.transpose()), l)?))?;
                }
            }
            "ica" => {
                if let Some(a) = self.truth.get("A") {
                    let w_hat = qm * &self.data["whitener"];
                    push(MetricReport::new("amari_distance", amari_distance(&w_hat, a)?))?;
                }
            }
            "varimax" => {
                if let Some(b0) = self.truth.get("B0") {
                    let target = -varimax(b0);
                    push(MetricReport::new("varimax_gap", f_best - target).map(|r| r.with_baseline(0.0, None)))?;
                }
            }
            "ojd" => {
                let scale: f64 = numbered(&self.data, 'C').iter().map(|c| c.norm_squared()).sum();
                push(MetricReport::new("relative_offdiag", f_best / scale))?;
                if let Some(w) = self.truth.get("W_true") {
                    push(MetricReport::new("permutation_deviation", signed_permutation_deviation(&qm.tr_mul(w))?))?;
                }
            }
            "sspca" => {
                if let Some(y) = &self.labels {
                    let x = &self.data["X"];
                    push(MetricReport::new("sparsity", sparsity(qm)))?;
                    push(MetricReport::new("misclassification", misclassification(&(x * qm), y)?))?;
                }
            }
            "ackley" | "griewank" | "rosenbrock" | "rastrigin" => {
                push(MetricReport::new("objective_gap", f_best).map(|r| r.with_baseline(0.0, None)))?;
            }
            _ => {}
        }
        Ok(out)
    }
}
