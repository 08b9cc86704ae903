use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use booom::format::write_matrix;
use booom::stiefel::random_stiefel;
use booom_cli::pareto::{dominates, ParetoRow};
use booom_cli::report::{read_csv_rows, read_json, read_matrix_file, read_trace, BenchRow, Summary};
use nalgebra::DMatrix;

fn booom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_booom"))
        .args(args)
        .env_remove("BOOOM_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn metric(summary: &Summary, name: &str) -> f64 {
    summary.metrics.iter().find(|m| m.name == name).unwrap_or_else(|| panic!("no metric {name}")).value
}

#[test]
fn solve_rritz_writes_result_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rritz.toml", "objective = \"rritz\"\np = 20\nd = 2\nseed = 1\noutput_dir = \"out\"\n");
    let out = booom(&["solve", path_str(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("out");
    let summary: Summary = read_json(&root.join("summary.json")).unwrap();
    assert!(metric(&summary, "objective_gap") >= -1e-9);
    assert!(metric(&summary, "kkt_residual").is_finite());
    let q = read_matrix_file(&root.join("result.txt")).unwrap();
    assert_eq!((q.nrows(), q.ncols()), (20, 2));
    let trace = read_trace(&root.join("trace.jsonl")).unwrap();
    let min = trace.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
    assert_eq!(summary.f_best, min);
}

#[test]
fn missing_config_exits_2() {
    let out = booom(&["solve", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn d_greater_than_p_exits_2_naming_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "objective = \"rritz\"\np = 3\nd = 4\n");
    let out = booom(&["solve", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d must satisfy 1 <= d <= p"));
}

#[test]
fn unknown_key_and_bad_workers_env_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.toml", "objective = \"rritz\"\np = 3\nd = 1\nmax_iters = 5\n");
    assert_eq!(booom(&["solve", path_str(&cfg)]).status.code(), Some(2));
    let ok = write_config(dir.path(), "ok.toml", "objective = \"rritz\"\np = 3\nd = 1\nmax_iter = 5\n");
    let out = Command::new(env!("CARGO_BIN_EXE_booom"))
        .args(["solve", path_str(&ok)])
        .env("BOOOM_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_input_matrix_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("H.txt"), "2 2\n1 0\n0\n").unwrap();
    let cfg = write_config(dir.path(), "in.toml", "objective = \"rritz\"\np = 2\nd = 1\ninputs = [\"H.txt\"]\n");
    assert_eq!(booom(&["solve", path_str(&cfg)]).status.code(), Some(3));
}

#[test]
fn external_spawn_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ext.toml",
        "objective = \"external\"\np = 3\nd = 2\nexternal_command = [\"/nonexistent/objective\"]\n",
    );
    assert_eq!(booom(&["solve", path_str(&cfg)]).status.code(), Some(1));
}

#[test]
fn worker_override_keeps_results_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = |out: &str| format!("objective = \"rastrigin\"\np = 4\nd = 4\nseed = 3\nmax_iter = 60\nmax_runs = 2\noutput_dir = \"{out}\"\n");
    let a = write_config(dir.path(), "a.toml", &body("a"));
    let b = write_config(dir.path(), "b.toml", &body("b"));
    assert!(booom(&["solve", path_str(&a)]).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_booom"))
        .args(["solve", path_str(&b)])
        .env("BOOOM_WORKERS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let ta = std::fs::read(dir.path().join("a/trace.jsonl")).unwrap();
    let tb = std::fs::read(dir.path().join("b/trace.jsonl")).unwrap();
    assert_eq!(ta, tb);
}

#[test]
fn replicates_write_subdirectories_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "reps.toml",
        "objective = \"hetquad\"\np = 6\nd = 2\nseed = 4\nreplicates = 3\nreplicate_parallelism = 2\nmax_runs = 2\n",
    );
    assert!(booom(&["solve", path_str(&cfg)]).status.success());
    let root = dir.path().join("out");
    let rows: Vec<BenchRow> = read_csv_rows(&root.join("replicates.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    for r in 1..=3 {
        let sub = root.join(format!("replicate-{r:03}"));
        let summary: Summary = read_json(&sub.join("summary.json")).unwrap();
        assert_eq!(summary.replicate, r);
        assert_eq!(rows[r - 1].f_best, Some(summary.f_best));
    }
    let agg = &rows[3];
    assert!(agg.is_aggregate());
    assert!(rows[..3].iter().all(|r| agg.min.unwrap() <= r.f_best.unwrap()));
}

#[test]
fn jsonl_report_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "reps.toml",
        "objective = \"rritz\"\np = 4\nd = 1\nreplicates = 2\nreport_format = \"jsonl\"\nmax_runs = 1\n",
    );
    assert!(booom(&["solve", path_str(&cfg)]).status.success());
    let text = std::fs::read_to_string(dir.path().join("out/replicates.jsonl")).unwrap();
    let rows: Vec<BenchRow> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 3);
}

#[test]
fn init_file_sets_the_first_start() {
    let dir = tempfile::tempdir().unwrap();
    let init = DMatrix::<f64>::identity(5, 2);
    std::fs::write(dir.path().join("init.txt"), write_matrix(&init)).unwrap();
    let cfg = write_config(
        dir.path(),
        "init.toml",
        "objective = \"rritz\"\np = 5\nd = 2\ninit = \"init.txt\"\nmax_iter = 1\nmax_runs = 1\n",
    );
    assert!(booom(&["solve", path_str(&cfg)]).status.success());
    let wrong = DMatrix::<f64>::identity(5, 3);
    std::fs::write(dir.path().join("init.txt"), write_matrix(&wrong)).unwrap();
    assert_eq!(booom(&["solve", path_str(&cfg)]).status.code(), Some(3));
}

fn bench(dir: &Path, out: &str) -> Vec<BenchRow> {
    let out_dir = dir.join(out);
    let o = booom(&[
        "bench", "--suite", "rastrigin", "--p", "2", "--replicates", "3", "--budget", "10", "--seed", "5",
        "--out", path_str(&out_dir), "--max-runs", "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out_dir.join("bench.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), booom_cli::report::BENCH_HEADER);
    read_csv_rows(&out_dir.join("bench.csv")).unwrap()
}

#[test]
fn bench_rows_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = bench(dir.path(), "a");
    assert_eq!(a.len(), 4);
    assert_eq!(a.iter().filter(|r| r.is_aggregate()).count(), 1);
    let agg = &a[3];
    assert!(a[..3].iter().all(|r| agg.min.unwrap() <= r.f_best.unwrap()));
    let b = bench(dir.path(), "b");
    for (x, y) in a[..3].iter().zip(&b[..3]) {
        assert_eq!((&x.replicate, x.f_best, x.evaluations), (&y.replicate, y.f_best, y.evaluations));
    }
}

#[test]
fn bench_rejects_unknown_suite() {
    let dir = tempfile::tempdir().unwrap();
    let o = booom(&["bench", "--suite", "sphere", "--p", "3", "--budget", "1", "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

fn decompose(dir: &Path, m: &DMatrix<f64>) -> Output {
    let path = dir.join("u.txt");
    std::fs::write(&path, write_matrix(m)).unwrap();
    booom(&["decompose", path_str(&path)])
}

fn reported_error(out: &Output) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    let last = text.lines().last().unwrap();
    last.strip_prefix("reconstruction_error ").unwrap().parse().unwrap()
}

#[test]
fn decompose_identity_gives_zero_angles() {
    let dir = tempfile::tempdir().unwrap();
    let out = decompose(dir.path(), &DMatrix::identity(4, 4));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6 + 1);
    for l in &lines[..6] {
        assert_eq!(l.parse::<f64>().unwrap(), 0.0);
    }
    assert_eq!(reported_error(&out), 0.0);
}

#[test]
fn decompose_random_rotation_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = booom::rng::seeded(6);
    let mut u = random_stiefel(6, 6, &mut rng).unwrap().into_matrix();
    if u.determinant() < 0.0 {
        u.column_mut(0).neg_mut();
    }
    let out = decompose(dir.path(), &u);
    assert_eq!(out.status.code(), Some(0));
    assert!(reported_error(&out) <= 1e-10);
}

#[test]
fn decompose_rejects_reflections_and_non_orthogonal_input() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = DMatrix::<f64>::identity(3, 3);
    r[(2, 2)] = -1.0;
    let out = decompose(dir.path(), &r);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reflection"));
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    let out = decompose(dir.path(), &m);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not orthogonal"));
}

#[test]
fn pareto_single_point_is_pareto_optimal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.toml",
        "objective = \"sspca\"\np = 4\nd = 4\nn = 40\nseed = 2\nlambda1_grid = [0.0]\nlambda2_grid = [0.0]\nmax_runs = 1\n",
    );
    let out = booom(&["pareto", path_str(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<ParetoRow> = read_csv_rows(&dir.path().join("out/pareto.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].pareto);
    // With d = p, Q is square orthogonal and reconstructs X exactly.
    assert!(rows[0].reconstruction < 1e-12, "{}", rows[0].reconstruction);
    assert!(rows[0].objective.abs() < 1e-12);
    let imp = std::fs::read_to_string(dir.path().join("out/importance.csv")).unwrap();
    assert_eq!(imp.lines().count(), 1 + 4);
}

#[test]
fn pareto_grid_flags_are_undominated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.toml",
        "objective = \"sspca\"\np = 6\nd = 2\nn = 60\nd_signal = 2\nseed = 8\n\
         lambda1_grid = [0.0, 1.0, 10.0]\nlambda2_grid = [0.0, 10.0]\nmax_runs = 2\nmax_iter = 200\n",
    );
    let out = booom(&["pareto", path_str(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<ParetoRow> = read_csv_rows(&dir.path().join("out/pareto.csv")).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().any(|r| r.pareto));
    for a in rows.iter().filter(|r| r.pareto) {
        for b in &rows {
            assert!(!dominates((b.sparsity, b.misclassification), (a.sparsity, a.misclassification)));
        }
    }
    for a in rows.iter().filter(|r| !r.pareto) {
        assert!(rows.iter().any(|b| dominates((b.sparsity, b.misclassification), (a.sparsity, a.misclassification))));
    }
}

#[test]
fn pareto_requires_sspca() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.toml", "objective = \"rritz\"\np = 4\nd = 2\n");
    assert_eq!(booom(&["pareto", path_str(&cfg)]).status.code(), Some(2));
}

#[test]
fn gen_output_feeds_back_into_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "gen.toml",
        "objective = \"hetquad\"\np = 5\nd = 2\nseed = 12\npattern = \"toeplitz\"\noutput_dir = \"inst\"\n",
    );
    let out = booom(&["gen", path_str(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = read_json(&dir.path().join("inst/manifest.json")).unwrap();
    assert_eq!(manifest["kind"], "hetquad");
    assert_eq!(manifest["seed"], 12);
    assert_eq!(manifest["params"]["pattern"], "toeplitz");
    let files: Vec<String> = manifest["data"].as_object().unwrap().values().map(|v| v.as_str().unwrap().to_string()).collect();
    assert_eq!(files.len(), 2);

    let inst = booom::synth::generate(
        &booom::synth::GenParams::Hetquad { pattern: booom::synth::PsdPattern::Toeplitz, p: 5, d: 2 },
        12,
    )
    .unwrap();
    for (key, m) in &inst.data {
        assert_eq!(&read_matrix_file(&dir.path().join(format!("inst/{key}.txt"))).unwrap(), m);
    }

    let inputs: Vec<String> = files.iter().map(|f| format!("\"inst/{f}\"")).collect();
    let solve = write_config(
        dir.path(),
        "solve.toml",
        &format!("objective = \"hetquad\"\np = 5\nd = 2\ninputs = [{}]\nmax_runs = 1\n", inputs.join(", ")),
    );
    assert!(booom(&["solve", path_str(&solve)]).status.success());
}

#[test]
fn gen_writes_labels_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "gen.toml", "objective = \"sspca\"\np = 5\nd = 2\nn = 10\nseed = 1\n");
    assert!(booom(&["gen", path_str(&cfg)]).status.success());
    let y = booom_cli::report::read_labels(&dir.path().join("out/labels.txt")).unwrap();
    assert_eq!(y.len(), 10);
    assert!(dir.path().join("out/truth_X_raw.txt").exists());
}
