use std::path::PathBuf;
use std::process::ExitCode;

use booom_cli::commands::{self, BenchArgs};
use booom_cli::config::ReportFormat;
use booom_cli::CliError;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "booom", version, about = "Derivative-free optimization on the Stiefel manifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the objective described by a config file.
    Solve { config: PathBuf },
    /// Run the modified benchmark functions from random starts.
    Bench {
        /// Comma-separated subset of ackley, griewank, rosenbrock, rastrigin.
        #[arg(long, value_delimiter = ',', default_value = "ackley,griewank,rosenbrock,rastrigin")]
        suite: Vec<String>,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 10)]
        replicates: usize,
        /// Wall-clock budget per replicate, in seconds.
        #[arg(long)]
        budget: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        max_runs: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Print the Givens angles of a rotation matrix and the round-trip error.
    Decompose { matrix: PathBuf },
    /// Sweep the sspca penalty grid and mark the Pareto-optimal points.
    Pareto { config: PathBuf },
    /// Write a synthetic problem instance and its manifest.
    Gen { config: PathBuf },
}

fn execute(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Solve { config } => {
            for s in commands::solve(&config)? {
                println!("replicate {}: f_best = {:e} ({} evaluations)", s.replicate, s.f_best, s.evaluations);
            }
        }
        Command::Bench { suite, p, replicates, budget, seed, out, workers, max_iter, max_runs, format } => {
            let format = match format {
                Format::Csv => ReportFormat::Csv,
                Format::Jsonl => ReportFormat::Jsonl,
            };
            let args = BenchArgs { suite, p, replicates, budget, seed, out, workers, max_iter, max_runs, format };
            for row in commands::bench(&args)?.iter().filter(|r| r.is_aggregate()) {
                println!("{}: min = {:e}, mean = {:e}", row.kind, row.min.unwrap_or(f64::NAN), row.mean.unwrap_or(f64::NAN));
            }
        }
        Command::Decompose { matrix } => {
            let d = commands::decompose(&matrix)?;
            for a in &d.angles {
                println!("{a:.17e}");
            }
            println!("reconstruction_error {:e}", d.reconstruction_error);
            if !d.passed() {
                eprintln!("error: reconstruction error exceeds {:e}", commands::DECOMPOSE_TOL);
                return Ok(1);
            }
        }
        Command::Pareto { config } => {
            let report = commands::pareto(&config)?;
            let front = report.rows.iter().filter(|r| r.pareto).count();
            println!("{} grid points, {front} Pareto-optimal", report.rows.len());
        }
        Command::Gen { config } => {
            let manifest = commands::gen(&config)?;
            println!("{}", manifest.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
