//! Settings resolution, the compile/solve/analyze pipeline and output files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use qubo_forge::analysis::{analyze, round_floats, AnalysisOptions, AnalysisReport, SolutionReport};
use qubo_forge::compiler::{CompileConfig, LambdaMethod};
use qubo_forge::expression::format_sig;
use qubo_forge::problem::Problem;
use qubo_forge::problem_file::SolverSection;
use qubo_forge::solvers::{solve_with_lambda_update, LambdaRun, SolverKind, SolverParams, UpdateKind, UpdateStrategy};
use serde::Serialize;

/// Environment variable that, when set, replaces `--out-dir`.
pub const OUT_ENV: &str = "QUBO_FORGE_OUT";

/// `none` or one of the update rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LambdaUpdate(pub Option<UpdateKind>);

impl FromStr for LambdaUpdate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            Ok(LambdaUpdate(None))
        } else {
            s.parse().map(|k| LambdaUpdate(Some(k)))
        }
    }
}

impl fmt::Display for LambdaUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("none"),
            Some(k) => write!(f, "{k}"),
        }
    }
}

/// Flags shared by `solve` and `compare`. Unset flags fall back to the
/// problem file's `solver` section, then to the library defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// Independent annealing runs
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Annealing sweeps per run
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// QAOA layers
    #[arg(long)]
    pub layers: Option<usize>,
    /// QAOA measurement shots
    #[arg(long)]
    pub shots: Option<usize>,
    /// mqc, vlm, momc, moc, ub-naive, ub-positive, ub-posiform or manual:v1,v2,...
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_method: Option<LambdaMethod>,
    /// none, sequential, scaled or binary-search
    #[arg(long)]
    pub lambda_update: Option<LambdaUpdate>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Solve attempts allowed by the lambda update, the first included
    #[arg(long)]
    pub trials: Option<usize>,
    /// Reference energy for p_range
    #[arg(long, allow_hyphen_values = true)]
    pub val_ref: Option<f64>,
    /// Confidence level for time-to-solution
    #[arg(long)]
    pub p_conf: Option<f64>,
    /// Record wall times and report time-to-solution
    #[arg(long)]
    pub time: bool,
    /// Output directory (the QUBO_FORGE_OUT variable takes precedence)
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub params: SolverParams,
    pub compile: CompileConfig,
    pub update: Option<UpdateStrategy>,
    pub analysis: AnalysisOptions,
}

impl RunSettings {
    pub fn resolve(flags: &RunFlags, section: Option<&SolverSection>) -> Result<Self> {
        let s = section.cloned().unwrap_or_default();
        let mut params = SolverParams::default();
        if let Some(v) = flags.runs.or(s.runs) {
            params.runs = v;
        }
        if let Some(v) = flags.seed.or(s.seed) {
            params.seed = v;
        }
        if let Some(v) = flags.sweeps.or(s.sweeps) {
            params.sa.sweeps = v;
        }
        if let Some(v) = flags.layers.or(s.layers) {
            params.qaoa.layers = v;
        }
        if let Some(v) = flags.shots.or(s.shots) {
            params.qaoa.shots = v;
        }
        params.record_time = flags.time;
        params.validate()?;

        let method = match (&flags.lambda_method, &s.lambda_method) {
            (Some(m), _) => m.clone(),
            (None, Some(text)) => text.parse().context("solver section")?,
            (None, None) => LambdaMethod::Vlm,
        };
        let update = match (flags.lambda_update, &s.lambda_update) {
            (Some(u), _) => u,
            (None, Some(text)) => text.parse().map_err(anyhow::Error::msg).context("solver section")?,
            (None, None) => LambdaUpdate(None),
        };
        let update = update.0.map(|kind| {
            UpdateStrategy::new(kind, flags.lambda_max.or(s.lambda_max).unwrap_or(1e4), flags.trials.or(s.trials).unwrap_or(5))
        });
        let mut analysis = AnalysisOptions { val_ref: flags.val_ref, ..AnalysisOptions::default() };
        if let Some(p) = flags.p_conf {
            analysis.p_conf = p;
        }
        Ok(RunSettings { params, compile: CompileConfig::with_lambda(method), update, analysis })
    }
}

/// Solver named on the command line, else the problem file's, else `sa`.
pub fn pick_solver(flag: Option<SolverKind>, section: Option<&SolverSection>) -> Result<SolverKind> {
    match (flag, section.and_then(|s| s.solver.as_deref())) {
        (Some(k), _) => Ok(k),
        (None, Some(name)) => Ok(name.parse()?),
        (None, None) => Ok(SolverKind::Sa),
    }
}

pub fn out_dir(flag: &Path) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => flag.to_path_buf(),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solver: SolverKind,
    pub run: LambdaRun,
    pub report: AnalysisReport,
}

pub fn execute(problem: &Problem, settings: &RunSettings, solver: SolverKind) -> Result<RunOutcome> {
    let run = solve_with_lambda_update(problem, &settings.compile, solver, &settings.params, settings.update.as_ref())?;
    let report = analyze(problem, &run.model, &run.solution, &settings.analysis)?;
    Ok(RunOutcome { solver, run, report })
}

/// Per-solver summary written as `<stem>.<solver>.report.json` and as one
/// row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub solver: SolverKind,
    pub binaries: usize,
    pub best_energy: f64,
    pub feasible: bool,
    pub best_decoded: std::collections::BTreeMap<String, f64>,
    pub objective_values: Vec<f64>,
    pub valid_rate: f64,
    pub val_ref: Option<f64>,
    pub p_range: Option<f64>,
    pub t_f: Option<f64>,
    pub tts: Option<f64>,
    pub lambdas: Vec<f64>,
    pub trials: usize,
}

impl RunOutcome {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            solver: self.solver,
            binaries: self.run.model.num_binaries(),
            best_energy: self.report.best_energy,
            feasible: self.report.best_feasible,
            best_decoded: self.report.best_decoded.clone(),
            objective_values: self.report.objective_values.clone(),
            valid_rate: self.report.valid_rate,
            val_ref: self.report.val_ref,
            p_range: self.report.p_range,
            t_f: self.report.t_f,
            tts: self.report.tts,
            lambdas: self.run.lambdas().to_vec(),
            trials: self.run.trials,
        }
    }

    pub fn solution_report(&self) -> SolutionReport {
        let mut r = SolutionReport::new(self.run.solution.clone(), self.report.clone(), self.run.lambdas().to_vec());
        r.trials = Some(self.run.trials);
        r
    }

    /// Writes the solution JSON, summary JSON and cumulative CSV; returns
    /// their paths in that order.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<[PathBuf; 3]> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = |suffix: &str| dir.join(format!("{stem}.{}.{suffix}", self.solver));
        let (solution, summary, curve) = (path("solution.json"), path("report.json"), path("csv"));
        std::fs::write(&solution, self.solution_report().to_json())?;
        std::fs::write(&summary, to_rounded_json(&self.summary())?)?;
        write_cumulative(&curve, &self.report.cumulative)?;
        Ok([solution, summary, curve])
    }

    /// Human-readable result block.
    pub fn describe(&self) -> String {
        let s = self.summary();
        let mut out = format!(
            "solver:      {}\nbinaries:    {}\nbest energy: {}\nfeasible:    {}\ntrials:      {}\n",
            s.solver,
            s.binaries,
            format_sig(s.best_energy, 12),
            if s.feasible { "yes" } else { "no" },
            s.trials
        );
        for (name, value) in &s.best_decoded {
            out.push_str(&format!("  {name} = {}\n", format_sig(*value, 12)));
        }
        let objectives: Vec<String> = s.objective_values.iter().map(|v| format_sig(*v, 12)).collect();
        out.push_str(&format!("objectives:  {}\n", objectives.join(", ")));
        out.push_str(&format!("valid rate:  {}%\n", format_sig(s.valid_rate, 6)));
        if let (Some(v), Some(p)) = (s.val_ref, s.p_range) {
            out.push_str(&format!("p_range(<{}): {}%\n", format_sig(v, 12), format_sig(p, 6)));
        }
        if let Some(t) = s.tts {
            out.push_str(&format!("tts:         {} s\n", format_sig(t, 6)));
        }
        out
    }
}

fn to_rounded_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn write_cumulative(path: &Path, steps: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["energy", "cumulative_fraction"])?;
    for (e, f) in steps {
        w.write_record([format_sig(*e, 12), format_sig(*f, 12)])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every solver on its own thread and writes one summary table.
pub fn compare(problem: &Problem, settings: &RunSettings, solvers: &[SolverKind]) -> Result<Vec<RunOutcome>> {
    if solvers.is_empty() {
        bail!("no solvers given");
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = solvers.iter().map(|&s| scope.spawn(move || execute(problem, settings, s))).collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    })
}

pub fn write_summary_table(path: &Path, outcomes: &[RunOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["solver", "best_energy", "feasible", "valid_rate", "p_range", "tts"])?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format_sig(v, 12));
    for o in outcomes {
        let s = o.summary();
        w.write_record([
            s.solver.to_string(),
            format_sig(s.best_energy, 12),
            s.feasible.to_string(),
            format_sig(s.valid_rate, 12),
            opt(s.p_range),
            opt(s.tts),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width rendering of the comparison table.
pub fn summary_text(outcomes: &[RunOutcome]) -> String {
    let mut out = format!("{:<11} {:>14} {:>9} {:>11} {:>9} {:>12}\n", "solver", "best_energy", "feasible", "valid_rate", "p_range", "tts");
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format_sig(v, 6));
    for o in outcomes {
        let s = o.summary();
        out.push_str(&format!(
            "{:<11} {:>14} {:>9} {:>11} {:>9} {:>12}\n",
            s.solver.to_string(),
            format_sig(s.best_energy, 10),
            if s.feasible { "yes" } else { "no" },
            format_sig(s.valid_rate, 6),
            opt(s.p_range),
            opt(s.tts)
        ));
    }
    out
}
