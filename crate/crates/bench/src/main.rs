use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reupload_bench::experiment::write_json;
use reupload_bench::{
    boundary_grid, evaluate, resolve, run_experiment, sweep, write_grid_csv, write_sweep_csv, MinimizerKind, Overrides,
};
use reupload_core::problems::{generate_dataset, load_dataset, save_dataset};
use reupload_core::{CostKind, Error, Model, ProblemId, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "reupload",
    version,
    about = "Train and benchmark data re-uploading classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark dataset as CSV plus a JSON manifest.
    Generate {
        #[arg(long)]
        problem: ProblemId,
        /// Number of points (default: the problem's training set size).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one architecture and print its report.
    Train(ExperimentArgs),
    /// Success rate of a saved model on a dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// Dataset CSV; when absent a fresh set is generated.
        #[arg(long, conflicts_with = "problem")]
        data: Option<PathBuf>,
        #[arg(long, requires = "seed")]
        problem: Option<ProblemId>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train every layer count of one or more configs; writes `sweep.csv`, models and reports to `--out`.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Additional config files; each is swept with the same flag overrides.
        #[arg(long = "also")]
        also: Vec<PathBuf>,
        /// Concurrent cells (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Export a model's predicted classes over a grid of the (x1, x2) plane.
    Boundary {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        /// Fixed values of x3..xd, comma-separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        slice: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<ProblemId>,
    #[arg(long)]
    qubits: Option<usize>,
    /// Comma-separated layer counts.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    entangled: Option<bool>,
    #[arg(long)]
    cost: Option<CostKind>,
    #[arg(long)]
    minimizer: Option<MinimizerKind>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for model and report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            problem: self.problem,
            qubits: self.qubits,
            layers: self.layers.clone(),
            entangled: self.entangled,
            cost: self.cost,
            minimizer: self.minimizer,
            restarts: self.restarts,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::parse("output", e))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { problem, n, seed, out } => {
            let data = generate_dataset(problem, n.unwrap_or(problem.def().train_size), seed)?;
            save_dataset(&data, &out)
        }
        Command::Train(args) => {
            let cfg = resolve(args.config.as_deref(), &args.overrides())?;
            let (report, _) = run_experiment(&cfg)?;
            print_json(&report)
        }
        Command::Evaluate {
            model,
            data,
            problem,
            n,
            seed,
        } => {
            let data = match (data, problem, seed) {
                (Some(path), _, _) => load_dataset(&path)?,
                (None, Some(p), Some(seed)) => generate_dataset(p, n.unwrap_or(p.def().test_size), seed)?,
                _ => return Err(Error::invalid("evaluate needs --data, or --problem with --seed")),
            };
            print_json(&evaluate(&model, &data)?)
        }
        Command::Sweep { exp, also, workers } => {
            let overrides = exp.overrides();
            let mut configs = vec![resolve(exp.config.as_deref(), &overrides)?];
            for path in &also {
                configs.push(resolve(Some(path), &overrides)?);
            }
            let workers = if workers > 0 { workers } else { configs[0].workers };
            let dir = configs[0]
                .out
                .clone()
                .ok_or_else(|| Error::invalid("sweep needs an output directory (--out)"))?;
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let rows = sweep(&configs, workers)?;
            let table = dir.join("sweep.csv");
            write_sweep_csv(&table, &rows)?;
            let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
            print_json(&serde_json::json!({ "table": table, "rows": rows.len(), "failed": failed }))
        }
        Command::Boundary {
            model,
            resolution,
            slice,
            out,
        } => {
            let m = Model::load(&model)?;
            let cells = boundary_grid(&m, resolution, slice.as_deref())?;
            write_grid_csv(&out, &cells)?;
            write_json(
                &PathBuf::from(format!("{}.json", out.display())),
                &serde_json::json!({ "model": model, "resolution": resolution, "slice": slice }),
            )
        }
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end(), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}
