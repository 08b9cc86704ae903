//! The `solve`, `bench`, `decompose`, `pareto` and `gen` subcommands.
//!
//! Each returns the process exit code on success paths that are not errors
//! (`decompose` may report a failed round trip without erroring).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use booom::engine::{optimize, BooomConfig, BooomResult};
use booom::objectives::{BenchmarkKind, ModifiedBenchmark, SpcaTerms};
use booom::rng::derive_seed;
use booom::stiefel::{givens_compose, givens_decompose};
use booom::synth::generate;
use booom::StiefelPoint;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{workers_override, ExperimentConfig, ReportFormat};
use crate::error::CliError;
use crate::pareto::{importance_ranking, mark_pareto, misclassification, sparsity, ParetoRow};
use crate::problem::build_problem;
use crate::report::{
    read_matrix_file, write_json, write_labels, write_matrix_file, write_rows, write_trace, BenchRow, Stats,
    Summary,
};

/// Reconstruction error above which `decompose` exits non-zero.
pub const DECOMPOSE_TOL: f64 = 1e-8;

/// Seed of replicate `r` (1-based). A single replicate uses the master seed.
pub fn replicate_seed(master: u64, replicates: usize, r: usize) -> u64 {
    if replicates == 1 {
        master
    } else {
        derive_seed(master, r as u64)
    }
}

/// Engine seed for a replicate, kept apart from the data seed so the random
/// start is not drawn from the generator's stream.
pub fn engine_seed(replicate_seed: u64) -> u64 {
    derive_seed(replicate_seed, 1)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(&format!("cannot create {}", dir.display()), e))
}

/// Runs `f(0..n)` on up to `threads` threads, keeping the output order.
fn parallel_map<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.min(n))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot build thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

fn read_init(cfg: &ExperimentConfig) -> Result<Option<StiefelPoint>, CliError> {
    let Some(path) = &cfg.init else { return Ok(None) };
    let q = StiefelPoint::new(read_matrix_file(path)?).map_err(CliError::input)?;
    if (q.p(), q.d()) != (cfg.p, cfg.d) {
        return Err(CliError::Input(format!(
            "{}: initial point is {}x{}, expected {}x{}",
            path.display(),
            q.p(),
            q.d(),
            cfg.p,
            cfg.d
        )));
    }
    Ok(Some(q))
}

fn summarize(cfg: &ExperimentConfig, replicate: usize, seed: u64, result: &BooomResult, seconds: f64) -> Summary {
    Summary {
        objective: cfg.objective.clone(),
        p: cfg.p,
        d: cfg.d,
        replicate,
        seed,
        f_best: result.f_best,
        runs: result.runs_completed,
        evaluations: result.total_evaluations,
        failed_evaluations: result.failed_evaluations,
        repairs: result.trace.repairs,
        max_drift: result.trace.max_drift,
        wall_seconds: seconds,
        stop_reason: result.stop_reason,
        metrics: Vec::new(),
    }
}

/// One replicate of `solve`; writes `result.txt`, `trace.jsonl` and
/// `summary.json` into `dir`.
pub fn solve_replicate(cfg: &ExperimentConfig, replicate: usize, dir: &Path) -> Result<Summary, CliError> {
    let seed = replicate_seed(cfg.seed, cfg.replicates, replicate);
    let engine = cfg.booom_config(engine_seed(seed))?;
    let problem = build_problem(cfg, seed, engine.workers)?;
    let init = read_init(cfg)?;
    let start = Instant::now();
    let result = optimize(problem.objective.as_ref(), &engine, init.as_ref(), cfg.p, cfg.d)?;
    let seconds = start.elapsed().as_secs_f64();
    log::info!(
        "replicate {replicate}: f_best = {:e} after {} evaluations ({:?})",
        result.f_best,
        result.total_evaluations,
        result.stop_reason
    );

    let mut summary = summarize(cfg, replicate, seed, &result, seconds);
    summary.metrics = problem.metrics(&cfg.objective, &result.q_best, result.f_best)?;
    create_dir(dir)?;
    write_matrix_file(&dir.join("result.txt"), result.q_best.matrix())?;
    write_trace(&dir.join("trace.jsonl"), &result.trace)?;
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn rows_path(dir: &Path, stem: &str, format: ReportFormat) -> PathBuf {
    match format {
        ReportFormat::Csv => dir.join(format!("{stem}.csv")),
        ReportFormat::Jsonl => dir.join(format!("{stem}.jsonl")),
    }
}

fn aggregate_row(kind: &str, values: &[f64], times: &[f64]) -> Option<BenchRow> {
    Some(BenchRow::aggregate(kind, &Stats::of(values)?, &Stats::of(times)?))
}

/// `booom solve`: one replicate writes straight into `output_dir`; several
/// write `replicate-NNN/` subdirectories plus a `replicates` table.
pub fn solve(config_path: &Path) -> Result<Vec<Summary>, CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    create_dir(&cfg.output_dir)?;
    if cfg.replicates == 1 {
        return Ok(vec![solve_replicate(&cfg, 1, &cfg.output_dir)?]);
    }
    let summaries = parallel_map(cfg.replicates, cfg.replicate_parallelism, |k| {
        let r = k + 1;
        solve_replicate(&cfg, r, &cfg.output_dir.join(format!("replicate-{r:03}")))
    })?;
    let mut rows: Vec<BenchRow> = summaries
        .iter()
        .map(|s| BenchRow::replicate(&cfg.objective, s.replicate, s.f_best, s.evaluations, s.wall_seconds))
        .collect();
    let values: Vec<f64> = summaries.iter().map(|s| s.f_best).collect();
    let times: Vec<f64> = summaries.iter().map(|s| s.wall_seconds).collect();
    rows.extend(aggregate_row(&cfg.objective, &values, &times));
    let jsonl = cfg.report_format == ReportFormat::Jsonl;
    write_rows(&rows_path(&cfg.output_dir, "replicates", cfg.report_format), &rows, jsonl)?;
    Ok(summaries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchArgs {
    pub suite: Vec<String>,
    pub p: usize,
    pub replicates: usize,
    /// Wall-clock budget per replicate, in seconds.
    pub budget: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub max_iter: Option<usize>,
    pub max_runs: Option<usize>,
    pub format: ReportFormat,
}

impl BenchArgs {
    fn kinds(&self) -> Result<Vec<BenchmarkKind>, CliError> {
        if self.suite.is_empty() {
            return Err(CliError::Config("empty benchmark suite".into()));
        }
        self.suite
            .iter()
            .map(|s| s.parse().map_err(|_| CliError::Config(format!("unknown benchmark '{s}'"))))
            .collect()
    }

    fn engine_config(&self, seed: u64) -> Result<BooomConfig, CliError> {
        if !(self.budget >= 0.0) || !self.budget.is_finite() {
            return Err(CliError::Config(format!("budget must be a finite non-negative number, got {}", self.budget)));
        }
        let base = BooomConfig::default();
        let cfg = BooomConfig {
            seed,
            workers: workers_override()?.or(self.workers).unwrap_or(base.workers),
            wall_clock_budget: Some(Duration::from_secs_f64(self.budget)),
            max_iter: self.max_iter.unwrap_or(base.max_iter),
            max_runs: self.max_runs.unwrap_or(base.max_runs),
            ..base
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// `booom bench`: replicates of each modified benchmark from seeded random
/// starts; per-replicate rows followed by one aggregate row per function.
pub fn bench(args: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    let kinds = args.kinds()?;
    if args.p < 2 {
        return Err(CliError::Config(format!("p must be at least 2, got {}", args.p)));
    }
    if args.replicates == 0 {
        return Err(CliError::Config("replicates must be at least 1".into()));
    }
    args.engine_config(0)?;
    let mut rows = Vec::new();
    for kind in kinds {
        let objective = ModifiedBenchmark::new(kind, args.p).map_err(CliError::config)?;
        let name = kind.to_string();
        let mut values = Vec::new();
        let mut times = Vec::new();
        for r in 1..=args.replicates {
            let cfg = args.engine_config(derive_seed(args.seed, r as u64))?;
            let start = Instant::now();
            let result = optimize(&objective, &cfg, None, args.p, args.p)?;
            let seconds = start.elapsed().as_secs_f64();
            log::info!("{name} replicate {r}: f_best = {:e}", result.f_best);
            rows.push(BenchRow::replicate(&name, r, result.f_best, result.total_evaluations, seconds));
            values.push(result.f_best);
            times.push(seconds);
        }
        rows.extend(aggregate_row(&name, &values, &times));
    }
    create_dir(&args.out)?;
    write_rows(&rows_path(&args.out, "bench", args.format), &rows, args.format == ReportFormat::Jsonl)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub angles: Vec<f64>,
    pub reconstruction_error: f64,
}

impl Decomposition {
    pub fn passed(&self) -> bool {
        self.reconstruction_error <= DECOMPOSE_TOL
    }
}

/// `booom decompose`: angles of a rotation and the Frobenius error of
/// composing them back.
pub fn decompose(path: &Path) -> Result<Decomposition, CliError> {
    let u = read_matrix_file(path)?;
    if u.nrows() != u.ncols() {
        return Err(CliError::Input(format!("matrix is {}x{}, expected square", u.nrows(), u.ncols())));
    }
    let angles = givens_decompose(&u).map_err(CliError::input)?;
    let identity = StiefelPoint::identity(u.nrows(), u.nrows()).map_err(CliError::input)?;
    let back = givens_compose(&angles, &identity).map_err(CliError::input)?;
    let reconstruction_error = (back.matrix() - &u).norm();
    Ok(Decomposition { angles: angles.into_vec(), reconstruction_error })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoReport {
    pub rows: Vec<ParetoRow>,
    /// Index into `rows` of the configuration whose ranking was written.
    pub ranked: usize,
}

/// `booom pareto`: one optimization per (lambda1, lambda2) grid point on a
/// single sspca instance. Writes `pareto` rows and `importance.csv` for the
/// grid point with the lowest misclassification.
pub fn pareto(config_path: &Path) -> Result<ParetoReport, CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    if cfg.objective != "sspca" {
        return Err(CliError::Config(format!("pareto needs objective 'sspca', got '{}'", cfg.objective)));
    }
    let grid1 = if cfg.lambda1_grid.is_empty() { vec![cfg.lambda1.unwrap_or(0.0)] } else { cfg.lambda1_grid.clone() };
    let grid2 = if cfg.lambda2_grid.is_empty() { vec![cfg.lambda2.unwrap_or(0.0)] } else { cfg.lambda2_grid.clone() };
    let points: Vec<(f64, f64)> = grid1.iter().flat_map(|&a| grid2.iter().map(move |&b| (a, b))).collect();
    let init = read_init(&cfg)?;

    let solved = parallel_map(points.len(), cfg.replicate_parallelism, |k| {
        let (lambda1, lambda2) = points[k];
        let point_cfg = ExperimentConfig { lambda1: Some(lambda1), lambda2: Some(lambda2), ..cfg.clone() };
        let engine = point_cfg.booom_config(engine_seed(cfg.seed))?;
        let problem = build_problem(&point_cfg, cfg.seed, engine.workers)?;
        let result = optimize(problem.objective.as_ref(), &engine, init.as_ref(), cfg.p, cfg.d)?;
        let x = &problem.data["X"];
        let y = problem.labels.as_deref().ok_or_else(|| CliError::Runtime("sspca instance has no labels".into()))?;
        let q = result.q_best.matrix();
        let terms = SpcaTerms::compute(x, y, q, false)?;
        let row = ParetoRow {
            lambda1,
            lambda2,
            sparsity: sparsity(q),
            misclassification: misclassification(&(x * q), y)?,
            objective: result.f_best,
            reconstruction: terms.reconstruction,
            pareto: false,
        };
        Ok((row, result.q_best))
    })?;

    let (mut rows, qs): (Vec<ParetoRow>, Vec<StiefelPoint>) = solved.into_iter().unzip();
    mark_pareto(&mut rows);
    let ranked = (0..rows.len())
        .min_by(|&a, &b| rows[a].misclassification.total_cmp(&rows[b].misclassification))
        .expect("grid is non-empty");
    create_dir(&cfg.output_dir)?;
    let jsonl = cfg.report_format == ReportFormat::Jsonl;
    write_rows(&rows_path(&cfg.output_dir, "pareto", cfg.report_format), &rows, jsonl)?;
    write_rows(&rows_path(&cfg.output_dir, "importance", cfg.report_format), &importance_ranking(qs[ranked].matrix()), jsonl)?;
    Ok(ParetoReport { rows, ranked })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Manifest {
    kind: &'static str,
    params: booom::synth::GenParams,
    seed: u64,
    data: BTreeMap<String, String>,
    ground_truth: BTreeMap<String, String>,
    labels: Option<String>,
}

/// `booom gen`: writes the generator instance for a config to its
/// `output_dir`, one matrix file per data and ground-truth matrix, plus
/// `manifest.json`.
pub fn gen(config_path: &Path) -> Result<PathBuf, CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    let params = cfg.gen_params()?;
    let inst = generate(&params, cfg.seed).map_err(CliError::config)?;
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let write_all = |prefix: &str, set: &BTreeMap<String, nalgebra::DMatrix<f64>>| {
        let mut files = BTreeMap::new();
        for (key, m) in set {
            let file = format!("{prefix}{key}.txt");
            write_matrix_file(&dir.join(&file), m)?;
            files.insert(key.clone(), file);
        }
        Ok::<_, CliError>(files)
    };
    let data = write_all("", &inst.data)?;
    let ground_truth = write_all("truth_", &inst.ground_truth)?;
    let labels = match &inst.labels {
        Some(y) => {
            write_labels(&dir.join("labels.txt"), y)?;
            Some("labels.txt".to_string())
        }
        None => None,
    };
    let manifest = Manifest { kind: params.kind(), params, seed: cfg.seed, data, ground_truth, labels };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}
