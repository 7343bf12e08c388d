//! Retry loop that raises penalty weights until the best sample is feasible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{solve, SolutionSet, SolverError, SolverKind, SolverParams};
use crate::analysis::{check_constraints, check_encodings};
use crate::compiler::{compile, CompileConfig, PenaltySource, QuboModel};
use crate::problem::{Hardness, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateKind {
    /// `lambda * 10`
    Sequential,
    /// `round(lambda * lambda_max^(1/(t-1)))`
    Scaled,
    /// `round(sqrt(lambda * lambda_max))`
    BinarySearch,
}

impl fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateKind::Sequential => "sequential",
            UpdateKind::Scaled => "scaled",
            UpdateKind::BinarySearch => "binary-search",
        })
    }
}

impl FromStr for UpdateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" => Ok(UpdateKind::Sequential),
            "scaled" => Ok(UpdateKind::Scaled),
            "binary-search" => Ok(UpdateKind::BinarySearch),
            other => Err(format!("unknown lambda update `{other}`")),
        }
    }
}

/// Which penalty blocks get a new weight after an infeasible trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateScope {
    #[default]
    Violated,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateStrategy {
    pub kind: UpdateKind,
    pub lambda_max: f64,
    /// Total solve attempts, the first included.
    pub max_trials: usize,
    pub scope: UpdateScope,
}

impl UpdateStrategy {
    pub fn new(kind: UpdateKind, lambda_max: f64, max_trials: usize) -> Self {
        UpdateStrategy { kind, lambda_max, max_trials, scope: UpdateScope::Violated }
    }
}

/// Next weight under `kind`. Results are rounded half away from zero and
/// capped at `lambda_max`; when rounding would not increase a small weight,
/// the unrounded value is kept.
pub fn next_lambda(kind: UpdateKind, lambda: f64, lambda_max: f64, max_trials: usize) -> f64 {
    if lambda >= lambda_max {
        return lambda;
    }
    let raw = match kind {
        UpdateKind::Sequential => return (lambda * 10.0).min(lambda_max),
        UpdateKind::Scaled => lambda * lambda_max.powf(1.0 / (max_trials.max(2) - 1) as f64),
        UpdateKind::BinarySearch => (lambda * lambda_max).sqrt(),
    };
    let rounded = raw.round();
    let next = if rounded > lambda { rounded } else { raw };
    next.min(lambda_max)
}

#[derive(Debug, Clone)]
pub struct LambdaRun {
    pub solution: SolutionSet,
    pub model: QuboModel,
    /// Weights of every trial, first one included.
    pub history: Vec<Vec<f64>>,
    pub trials: usize,
    pub feasible: bool,
}

impl LambdaRun {
    pub fn lambdas(&self) -> &[f64] {
        self.history.last().expect("at least one trial")
    }
}

/// Hard penalty blocks violated by the best sample of `solution`.
fn violated_blocks(problem: &Problem, model: &QuboModel, solution: &SolutionSet) -> Vec<usize> {
    let best = solution.best_sample();
    let constraints = check_constraints(&best.decoded, problem, model).expect("decoded covers every variable");
    let encodings = check_encodings(best, &solution.variables, model);
    model
        .penalties
        .iter()
        .enumerate()
        .filter(|(_, b)| b.hardness == Hardness::Hard)
        .filter(|(_, b)| match &b.source {
            PenaltySource::Constraint { index } => !constraints[*index].satisfied,
            PenaltySource::Encoding { variable, .. } => encodings.iter().any(|(v, ok)| v == variable && !ok),
        })
        .map(|(k, _)| k)
        .collect()
}

/// Compiles, solves and, while the best sample is infeasible, raises the
/// weights of violated hard constraints. Without a strategy this is a single
/// compile and solve.
pub fn solve_with_lambda_update(
    problem: &Problem,
    config: &CompileConfig,
    solver: SolverKind,
    params: &SolverParams,
    strategy: Option<&UpdateStrategy>,
) -> Result<LambdaRun, SolverError> {
    if let Some(s) = strategy {
        if s.max_trials == 0 || !(s.lambda_max > 0.0) {
            return Err(SolverError::InvalidParams("lambda update needs trials >= 1 and lambda_max > 0".into()));
        }
    }
    let mut model = compile(problem, config)?;
    let mut history = vec![model.lambdas()];
    let max_trials = strategy.map_or(1, |s| s.max_trials);
    let mut trial = 1;
    loop {
        let solution = solve(&model, solver, params)?;
        let violated = violated_blocks(problem, &model, &solution);
        let feasible = violated.is_empty() && solution.best_sample().encoding_valid;
        let Some(strategy) = strategy.filter(|_| !feasible && trial < max_trials) else {
            return Ok(LambdaRun { solution, model, history, trials: trial, feasible });
        };
        let targets: Vec<usize> = match strategy.scope {
            UpdateScope::Violated if !violated.is_empty() => violated,
            _ => (0..model.penalties.len()).collect(),
        };
        let mut lambdas = model.lambdas();
        for k in targets {
            lambdas[k] = next_lambda(strategy.kind, lambdas[k], strategy.lambda_max, strategy.max_trials);
        }
        if lambdas == model.lambdas() {
            log::warn!("penalty weights reached lambda_max without a feasible solution");
            return Ok(LambdaRun { solution, model, history, trials: trial, feasible });
        }
        log::info!("trial {trial} infeasible; new lambdas {lambdas:?}");
        model = model.with_lambdas(&lambdas)?;
        history.push(lambdas);
        trial += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_updates() {
        assert_eq!(next_lambda(UpdateKind::Sequential, 10.0, 1e4, 5), 100.0);
        assert_eq!(next_lambda(UpdateKind::BinarySearch, 10.0, 1000.0, 5), 100.0);
        assert_eq!(next_lambda(UpdateKind::Scaled, 10.0, 1000.0, 4), 100.0);
    }

    #[test]
    fn small_weights_still_grow() {
        assert_eq!(next_lambda(UpdateKind::Sequential, 0.01, 1e4, 5), 0.1);
        let b = next_lambda(UpdateKind::BinarySearch, 0.0001, 1.0, 5);
        assert!(b > 0.0001 && b < 1.0);
    }

    #[test]
    fn capped_at_max() {
        assert_eq!(next_lambda(UpdateKind::Sequential, 500.0, 1000.0, 5), 1000.0);
        assert_eq!(next_lambda(UpdateKind::Scaled, 1000.0, 1000.0, 5), 1000.0);
    }

    #[test]
    fn names_parse() {
        for k in [UpdateKind::Sequential, UpdateKind::Scaled, UpdateKind::BinarySearch] {
            assert_eq!(k.to_string().parse::<UpdateKind>().unwrap(), k);
        }
    }
}
