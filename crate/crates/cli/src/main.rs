use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qubo_forge::compiler::{compile, CompileConfig, LambdaMethod};
use qubo_forge::expression::format_sig;
use qubo_forge::problem::Problem;
use qubo_forge::problem_file::{load_problem, save_problem};
use qubo_forge::solvers::SolverKind;
use qubo_forge_cli::run::{self, out_dir, pick_solver, RunFlags, RunSettings};
use qubo_forge_cli::{build_regression, load_knapsack, RegressionDataset, WeightGrid, EXIT_ERROR, EXIT_FEASIBLE, EXIT_INFEASIBLE};

/// Build, solve and benchmark QUBO formulations of constrained problems.
#[derive(Debug, Parser)]
#[command(name = "qubo-forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile, solve and analyze a problem file
    Solve {
        problem: PathBuf,
        /// exhaustive, sa or qaoa
        #[arg(long)]
        solver: Option<SolverKind>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run several solvers on one problem and tabulate the results
    Compare {
        problem: PathBuf,
        /// Comma-separated or repeated solver names
        #[arg(long = "solver", required = true, value_delimiter = ',', num_args = 1..)]
        solvers: Vec<SolverKind>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Write the compiled QUBO model without solving
    Compile {
        problem: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda_method: Option<LambdaMethod>,
        /// Also write the `i j value` coefficient listing
        #[arg(long)]
        matrix: bool,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Turn a 0/1 knapsack instance file into a problem file
    GenKnapsack {
        instance: PathBuf,
        /// Output problem file (default: <out-dir>/<instance stem>.json)
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Turn a CSV dataset into a least-squares regression problem file
    GenRegression {
        dataset: PathBuf,
        /// Leading feature columns to use; the last column is the label
        #[arg(long, default_value_t = 2)]
        features: usize,
        #[arg(long, default_value_t = -0.25, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
        max: f64,
        #[arg(long, default_value_t = 0.25)]
        precision: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "problem".to_string(), |s| s.to_string_lossy().into_owned())
}

fn load(path: &Path) -> Result<(Problem, Option<qubo_forge::problem_file::SolverSection>)> {
    load_problem(path).with_context(|| format!("loading {}", path.display()))
}

fn generated_path(output: Option<PathBuf>, out_flag: &Path, source: &Path) -> Result<PathBuf> {
    Ok(match output {
        Some(p) => p,
        None => {
            let dir = out_dir(out_flag);
            std::fs::create_dir_all(&dir)?;
            dir.join(format!("{}.json", stem(source)))
        }
    })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve { problem: path, solver, flags } => {
            let (problem, section) = load(&path)?;
            let solver = pick_solver(solver, section.as_ref())?;
            let settings = RunSettings::resolve(&flags, section.as_ref())?;
            let outcome = run::execute(&problem, &settings, solver)?;
            let files = outcome.write(&out_dir(&flags.out_dir), &stem(&path))?;
            print!("{}", outcome.describe());
            for f in &files {
                log::info!("wrote {}", f.display());
            }
            Ok(if outcome.report.best_feasible { EXIT_FEASIBLE } else { EXIT_INFEASIBLE })
        }
        Command::Compare { problem: path, solvers, flags } => {
            let (problem, section) = load(&path)?;
            let settings = RunSettings::resolve(&flags, section.as_ref())?;
            let outcomes = run::compare(&problem, &settings, &solvers)?;
            let dir = out_dir(&flags.out_dir);
            for o in &outcomes {
                o.write(&dir, &stem(&path))?;
            }
            run::write_summary_table(&dir.join(format!("{}.summary.csv", stem(&path))), &outcomes)?;
            print!("{}", run::summary_text(&outcomes));
            Ok(if outcomes.iter().all(|o| o.report.best_feasible) { EXIT_FEASIBLE } else { EXIT_INFEASIBLE })
        }
        Command::Compile { problem: path, lambda_method, matrix, out_dir: out_flag } => {
            let (problem, section) = load(&path)?;
            let method = match (lambda_method, section.and_then(|s| s.lambda_method)) {
                (Some(m), _) => m,
                (None, Some(text)) => text.parse()?,
                (None, None) => LambdaMethod::Vlm,
            };
            let model = compile(&problem, &CompileConfig::with_lambda(method))?;
            let dir = out_dir(&out_flag);
            std::fs::create_dir_all(&dir)?;
            model.save(&dir.join(format!("{}.model.json", stem(&path))))?;
            if matrix {
                std::fs::write(dir.join(format!("{}.qubo.txt", stem(&path))), model.to_matrix_text())?;
            }
            println!("binaries:  {}", model.num_binaries());
            println!("terms:     {}", model.quadratic.len());
            println!("offset:    {}", format_sig(model.offset, 12));
            for block in &model.penalties {
                println!("lambda {:>12}  {}", format_sig(block.lambda, 8), block.description);
            }
            Ok(EXIT_FEASIBLE)
        }
        Command::GenKnapsack { instance, output, out_dir: out_flag } => {
            let (k, problem) = load_knapsack(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let target = generated_path(output, &out_flag, &instance)?;
            save_problem(&target, &problem, None)?;
            println!("{} items, capacity {} -> {}", k.n_obj, format_sig(k.w_max, 12), target.display());
            Ok(EXIT_FEASIBLE)
        }
        Command::GenRegression { dataset, features, min, max, precision, output, out_dir: out_flag } => {
            let grid = WeightGrid { min, max, precision };
            let data = RegressionDataset::from_csv(&dataset, features, grid).with_context(|| format!("reading {}", dataset.display()))?;
            let problem = build_regression(&data)?;
            let target = generated_path(output, &out_flag, &dataset)?;
            save_problem(&target, &problem, None)?;
            println!("{} rows, {} weights -> {}", data.y.len(), data.dim(), target.display());
            Ok(EXIT_FEASIBLE)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_FEASIBLE };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            // Library errors often repeat their source in the message.
            let mut msg = e.to_string();
            for cause in e.chain().skip(1).map(ToString::to_string) {
                if !msg.ends_with(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
