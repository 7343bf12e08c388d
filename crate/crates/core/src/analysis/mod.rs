//! Validation and scoring of solver output.

mod report_io;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report_io::{load_report, round_floats, save_report, ReportError, SolutionReport, SOLUTION_SCHEMA};

use crate::compiler::{PenaltySource, QuboModel};
use crate::expression::{CmpOp, MissingVariable};
use crate::problem::{ConstraintForm, Hardness, Problem};
use crate::solvers::{Sample, SolutionSet, SolverKind};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("decoded solution lacks variable `{0}`")]
    MissingVariable(String),
    #[error("p_conf must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("solution has no samples")]
    Empty,
}

impl From<MissingVariable> for AnalysisError {
    fn from(e: MissingVariable) -> Self {
        AnalysisError::MissingVariable(e.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResult {
    pub index: usize,
    pub description: String,
    pub hardness: Hardness,
    pub satisfied: bool,
    /// Violation magnitude; 0 when satisfied exactly.
    pub residual: f64,
}

/// Grid step of constraint `k`: the slack precision the compiler chose.
fn constraint_step(model: &QuboModel, k: usize) -> f64 {
    model
        .penalties
        .iter()
        .find(|b| b.source == PenaltySource::Constraint { index: k })
        .map(|b| b.slack_precision)
        .unwrap_or(1.0)
}

/// Evaluates every declared constraint on decoded values. Inequalities are
/// accepted within half a slack step; equalities and gates are exact up to
/// rounding noise.
pub fn check_constraints(
    decoded: &BTreeMap<String, f64>,
    problem: &Problem,
    model: &QuboModel,
) -> Result<Vec<ConstraintResult>, AnalysisError> {
    let lookup = |n: &str| decoded.get(n).copied();
    let mut out = Vec::with_capacity(problem.constraints().len());
    for (k, decl) in problem.constraints().iter().enumerate() {
        let (satisfied, residual, description) = match &decl.form {
            ConstraintForm::Comparison(c) => {
                let step = constraint_step(model, k);
                let value = c.lhs.evaluate_with(lookup)?;
                let residual = c.residual(value, step);
                let tol = if c.op == CmpOp::Eq { 1e-9 * c.rhs.abs().max(1.0) } else { step / 2.0 };
                (residual <= tol, residual, c.to_string())
            }
            ConstraintForm::Boolean { kind, output, inputs } => {
                let get = |n: &String| lookup(n).ok_or_else(|| AnalysisError::MissingVariable(n.clone()));
                let ins: Vec<bool> = inputs.iter().map(|i| get(i).map(|v| v > 0.5)).collect::<Result<_, _>>()?;
                let z = get(output)? > 0.5;
                let ok = kind.apply(&ins) == z;
                (ok, if ok { 0.0 } else { 1.0 }, format!("{output} = {kind}({})", inputs.join(", ")))
            }
        };
        out.push(ConstraintResult { index: k, description, hardness: decl.hardness, satisfied, residual });
    }
    Ok(out)
}

/// True when every counted constraint holds; weak ones count only when
/// `include_weak` is set.
pub fn all_satisfied(results: &[ConstraintResult], include_weak: bool) -> bool {
    results.iter().filter(|r| include_weak || r.hardness == Hardness::Hard).all(|r| r.satisfied)
}

/// Per-encoding validity of a sample (one-hot, ordering chains).
pub fn check_encodings(sample: &Sample, variables: &[String], model: &QuboModel) -> Vec<(String, bool)> {
    let bits = sample.bit_map(variables);
    model
        .encodings
        .iter()
        .map(|plan| {
            let valid = plan.decode(|n| bits.get(n).copied()).map(|d| d.valid).unwrap_or(false);
            (plan.source.clone(), valid)
        })
        .collect()
}

/// Feasibility of one sample: valid encodings and satisfied constraints.
pub fn sample_is_valid(sample: &Sample, problem: &Problem, model: &QuboModel, include_weak: bool) -> Result<bool, AnalysisError> {
    Ok(sample.encoding_valid && all_satisfied(&check_constraints(&sample.decoded, problem, model)?, include_weak))
}

/// Value of each declared objective in its own sense (no weight, no sign
/// flip).
pub fn objective_values(decoded: &BTreeMap<String, f64>, problem: &Problem) -> Result<Vec<f64>, AnalysisError> {
    problem
        .objectives()
        .iter()
        .map(|o| o.expr.evaluate_with(|n| decoded.get(n).copied()).map_err(AnalysisError::from))
        .collect()
}

/// Percentage of energies strictly below `val_ref`.
pub fn p_range(energies: &[f64], val_ref: f64) -> f64 {
    if energies.is_empty() {
        return 0.0;
    }
    100.0 * energies.iter().filter(|&&e| e < val_ref).count() as f64 / energies.len() as f64
}

/// Time to reach the target with confidence `p_conf`, given per-run time
/// `t_f` and per-run success fraction `p`. Infinite when `p = 0`; `t_f` when
/// `p = 1`.
pub fn tts(t_f: f64, p_conf: f64, p: f64) -> f64 {
    if p <= 0.0 {
        f64::INFINITY
    } else if p >= 1.0 {
        t_f
    } else {
        t_f * (1.0 - p_conf).ln() / (1.0 - p).ln()
    }
}

/// Sorted `(energy, fraction at or below)` steps; energies within 1e-9 share
/// one step.
pub fn cumulative_distribution(energies: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, e) in sorted.iter().enumerate() {
        let frac = (k + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if (e - last.0).abs() <= 1e-9 => last.1 = frac,
            _ => out.push((*e, frac)),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub val_ref: Option<f64>,
    pub p_conf: f64,
    pub include_weak: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { val_ref: None, p_conf: 0.99, include_weak: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// Percentage of samples that are feasible.
    pub valid_rate: f64,
    pub best_energy: f64,
    pub best_feasible: bool,
    pub best_decoded: BTreeMap<String, f64>,
    pub objective_values: Vec<f64>,
    pub constraint_results: Vec<ConstraintResult>,
    pub val_ref: Option<f64>,
    pub p_range: Option<f64>,
    pub cumulative: Vec<(f64, f64)>,
    pub p_conf: f64,
    /// Mean wall time per run, when recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tts: Option<f64>,
}

/// Samples that count as independent solver outcomes. Annealing runs and
/// QAOA shots each count; the exhaustive solver returns the optimum on every
/// run, so only its best sample counts and the rest of its ranked list is
/// landscape information.
pub fn run_samples(solution: &SolutionSet) -> &[Sample] {
    match solution.solver {
        SolverKind::Exhaustive => std::slice::from_ref(solution.best_sample()),
        _ => &solution.samples,
    }
}

pub fn analyze(
    problem: &Problem,
    model: &QuboModel,
    solution: &SolutionSet,
    options: &AnalysisOptions,
) -> Result<AnalysisReport, AnalysisError> {
    if solution.samples.is_empty() {
        return Err(AnalysisError::Empty);
    }
    if !(options.p_conf > 0.0 && options.p_conf < 1.0) {
        return Err(AnalysisError::InvalidConfidence(options.p_conf));
    }
    let runs = run_samples(solution);
    let mut valid = 0usize;
    for s in runs {
        if sample_is_valid(s, problem, model, options.include_weak)? {
            valid += 1;
        }
    }
    let best = solution.best_sample();
    let constraint_results = check_constraints(&best.decoded, problem, model)?;
    let best_feasible = best.encoding_valid && all_satisfied(&constraint_results, options.include_weak);
    let energies: Vec<f64> = runs.iter().map(|s| s.energy).collect();
    let p_range = options.val_ref.map(|v| p_range(&energies, v));
    let t_f = solution.mean_run_time();
    let tts = match (t_f, p_range) {
        (Some(t), Some(p)) => Some(tts(t, options.p_conf, p / 100.0)),
        _ => None,
    };
    Ok(AnalysisReport {
        valid_rate: 100.0 * valid as f64 / runs.len() as f64,
        best_energy: solution.best_energy,
        best_feasible,
        best_decoded: best.decoded.clone(),
        objective_values: objective_values(&best.decoded, problem)?,
        constraint_results,
        val_ref: options.val_ref,
        p_range,
        cumulative: cumulative_distribution(&energies),
        p_conf: options.p_conf,
        t_f,
        tts,
    })
}
