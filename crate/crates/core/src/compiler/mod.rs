//! Turns a [`Problem`] into a solver-ready QUBO.
//!
//! Pipeline: encode every variable, substitute the encodings into the
//! objectives and constraints, convert each constraint into a non-negative
//! penalty, weight the penalties, and finally reduce the total energy to
//! degree two.

mod lambda;
mod model_io;
mod penalty;
mod quadratize;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lambda::{
    estimate_lambda, flip_bounds, mqc, moc, momc, sanitize, ub_naive, ub_positive, ub_posiform, vlm, LambdaError,
    LambdaMethod, UnknownLambdaMethod,
};
pub use model_io::{ModelFileError, MODEL_SCHEMA};
pub use penalty::{
    binary_bounds, boolean_penalty, brute_force_min, equality_penalty, inequality_to_penalty, inequality_to_penalty_within,
    InequalityPenalty,
};
pub use quadratize::{default_penalty_scale, quadratize, AuxRecord};

use crate::encoding::{encode, Decoded, EncodingError, EncodingPlan};
use crate::expression::{CmpOp, Comparison, Polynomial};
use crate::problem::{
    is_trivial, ConstraintDecl, ConstraintForm, Direction, Hardness, ObjectiveTerm, Problem, ProblemError, VariableKind,
};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error("penalty multipliers must be positive, got {0}")]
    InvalidMultiplier(f64),
    #[error("slack precision must be positive, got {0}")]
    InvalidSlackPrecision(f64),
    #[error("expected {expected} lambda values, got {got}")]
    LambdaCount { expected: usize, got: usize },
}

/// How the discretization step of inequality slacks is chosen when a
/// constraint does not set one itself.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "precision")]
pub enum SlackPolicy {
    /// Finest precision among continuous variables in the constraint; for
    /// constraints without continuous variables, 1 when every coefficient is
    /// integral, otherwise the common divisor of the coefficients.
    #[default]
    FromVariables,
    Explicit(f64),
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileConfig {
    pub lambda_method: LambdaMethod,
    pub hard_multiplier: f64,
    pub weak_multiplier: f64,
    pub slack_precision_policy: SlackPolicy,
    /// Rosenberg penalty scale; derived from the energy when unset.
    pub penalty_scale: Option<f64>,
}

impl Default for CompileConfig {
    fn default() -> Self {
        CompileConfig {
            lambda_method: LambdaMethod::Vlm,
            hard_multiplier: 1.0,
            weak_multiplier: 0.3,
            slack_precision_policy: SlackPolicy::FromVariables,
            penalty_scale: None,
        }
    }
}

impl CompileConfig {
    pub fn with_lambda(method: LambdaMethod) -> Self {
        CompileConfig { lambda_method: method, ..Self::default() }
    }
}

/// Where a penalty block came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PenaltySource {
    /// Index into the problem's constraint list.
    Constraint { index: usize },
    /// Constraint `index` of the encoding of `variable`.
    Encoding { variable: String, index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBlock {
    pub source: PenaltySource,
    /// Human-readable form of the constraint.
    pub description: String,
    pub penalty: Polynomial,
    pub lambda: f64,
    pub hardness: Hardness,
    /// Slack or auxiliary binaries owned by this block.
    pub slack_plan: Option<EncodingPlan>,
    /// Discretization step of the slack; also the grid used when checking
    /// the constraint on decoded values.
    pub slack_precision: f64,
}

/// A compiled problem: `offset + quadratic` over binaries, plus everything
/// needed to decode and re-weight it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    /// Degree ≤ 2 terms, constant excluded.
    pub quadratic: Polynomial,
    pub offset: f64,
    pub encodings: Vec<EncodingPlan>,
    pub penalties: Vec<PenaltyBlock>,
    pub aux_registry: Vec<AuxRecord>,
    /// Composed objective over binaries, before penalties.
    pub cost: Polynomial,
    pub config: CompileConfig,
}

impl QuboModel {
    /// Every binary in a stable order: encodings, then block slacks, then
    /// quadratization auxiliaries.
    pub fn binaries(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for plan in &self.encodings {
            out.extend(plan.binary_names().map(str::to_string));
        }
        for block in &self.penalties {
            if let Some(plan) = &block.slack_plan {
                out.extend(plan.binary_names().map(str::to_string));
            }
        }
        out.extend(self.aux_registry.iter().map(|r| r.aux.clone()));
        out
    }

    pub fn num_binaries(&self) -> usize {
        self.binaries().len()
    }

    /// The full energy `offset + quadratic`.
    pub fn energy_polynomial(&self) -> Polynomial {
        &self.quadratic + &Polynomial::constant(self.offset)
    }

    /// Energy of a bit assignment; missing binaries are an error.
    pub fn energy(&self, bits: &HashMap<String, u8>) -> Result<f64, crate::expression::MissingVariable> {
        self.quadratic.evaluate_with(|n| bits.get(n).map(|&b| f64::from(b))).map(|e| e + self.offset)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.penalties.iter().map(|b| b.lambda).collect()
    }

    /// Decodes every source variable from a bit assignment.
    pub fn decode(&self, bits: &HashMap<String, u8>) -> Result<Vec<(String, Decoded)>, EncodingError> {
        self.encodings
            .iter()
            .map(|plan| Ok((plan.source.clone(), plan.decode(|n| bits.get(n).copied())?)))
            .collect()
    }

    /// Rebuilds the energy with new penalty weights, one per block.
    pub fn with_lambdas(&self, lambdas: &[f64]) -> Result<QuboModel, CompileError> {
        if lambdas.len() != self.penalties.len() {
            return Err(CompileError::LambdaCount { expected: self.penalties.len(), got: lambdas.len() });
        }
        let mut penalties = self.penalties.clone();
        for (block, &l) in penalties.iter_mut().zip(lambdas) {
            block.lambda = l;
        }
        Ok(assemble(self.cost.clone(), self.encodings.clone(), penalties, self.config.clone()))
    }
}

/// Weighted sum of the objectives with every variable replaced by its
/// encoding; maximize terms are negated.
pub fn compose_cost(objectives: &[ObjectiveTerm], encodings: &[EncodingPlan]) -> Polynomial {
    let map: HashMap<String, Polynomial> = encodings.iter().map(|p| (p.source.clone(), p.affine())).collect();
    let mut total = Polynomial::zero();
    for term in objectives {
        let sign = match term.direction {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        };
        total = &total + &term.expr.substitute_all(&map).scale(sign * term.weight);
    }
    total.reduce_idempotent(|_| true)
}

fn approx_gcd(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    const SCALE: f64 = 1e6;
    let mut g: u64 = 0;
    for v in values {
        let n = (v.abs() * SCALE).round() as u64;
        let (mut a, mut b) = (g, n);
        while b != 0 {
            (a, b) = (b, a % b);
        }
        g = a;
    }
    (g > 0).then(|| g as f64 / SCALE)
}

fn slack_precision(problem: &Problem, decl: &ConstraintDecl, lhs: &Polynomial, rhs: f64, policy: SlackPolicy) -> f64 {
    if let Some(p) = decl.slack_precision {
        return p;
    }
    match policy {
        SlackPolicy::Explicit(p) => p,
        SlackPolicy::Integer => 1.0,
        SlackPolicy::FromVariables => {
            if let Some(p) = problem.min_continuous_precision(decl) {
                return p;
            }
            let coeffs: Vec<f64> = lhs.terms().map(|(_, c)| c).chain(std::iter::once(rhs)).collect();
            if coeffs.iter().all(|c| (c - c.round()).abs() < 1e-9) {
                1.0
            } else {
                approx_gcd(coeffs).map(|g| g.min(1.0)).unwrap_or(1.0)
            }
        }
    }
}

fn interval_mul((a, b): (f64, f64), (c, d): (f64, f64)) -> (f64, f64) {
    let p = [a * c, a * d, b * c, b * d];
    (p.iter().copied().fold(f64::INFINITY, f64::min), p.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Range of a polynomial over the declared domains of its variables.
pub fn domain_bounds(problem: &Problem, p: &Polynomial) -> Option<(f64, f64)> {
    let mut total = (0.0, 0.0);
    for (m, c) in p.terms() {
        let mut iv = (c, c);
        for (v, k) in m.powers() {
            let dom = match &problem.variable(v)?.kind {
                VariableKind::BinaryUnipolar => (0.0, 1.0),
                VariableKind::BinaryBipolar => (-1.0, 1.0),
                VariableKind::Discrete { levels } => (
                    levels.iter().copied().fold(f64::INFINITY, f64::min),
                    levels.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                ),
                VariableKind::Continuous { lo, hi, .. } => (*lo, *hi),
            };
            let mut pow = (1.0, 1.0);
            for _ in 0..k {
                pow = interval_mul(pow, dom);
            }
            if k % 2 == 0 && dom.0 < 0.0 && dom.1 > 0.0 {
                pow.0 = 0.0;
            }
            iv = interval_mul(iv, pow);
        }
        total = (total.0 + iv.0, total.1 + iv.1);
    }
    Some(total)
}

/// Penalty for a comparison already expressed over binaries.
fn comparison_block(
    c: &Comparison,
    known: Option<(f64, f64)>,
    precision: f64,
    slack_name: &str,
) -> (Polynomial, Option<EncodingPlan>) {
    if is_trivial(c) {
        return (Polynomial::zero(), None);
    }
    match c.op {
        CmpOp::Eq => (equality_penalty(c), None),
        _ => {
            let ip = inequality_to_penalty_within(c, known, precision, slack_name);
            (ip.penalty, ip.slack)
        }
    }
}

/// Compiles a problem into a QUBO model.
pub fn compile(problem: &Problem, config: &CompileConfig) -> Result<QuboModel, CompileError> {
    problem.validate()?;
    for m in [config.hard_multiplier, config.weak_multiplier] {
        if !(m > 0.0 && m.is_finite()) {
            return Err(CompileError::InvalidMultiplier(m));
        }
    }
    if let SlackPolicy::Explicit(p) = config.slack_precision_policy {
        if !(p > 0.0) {
            return Err(CompileError::InvalidSlackPrecision(p));
        }
    }

    let encodings: Vec<EncodingPlan> = problem.variables().iter().map(encode).collect::<Result<_, _>>()?;
    let affine: HashMap<String, Polynomial> = encodings.iter().map(|p| (p.source.clone(), p.affine())).collect();
    let single_bit = |name: &str| encodings.iter().find(|p| p.source == name).map(|p| p.binaries[0].0.clone());
    let cost = compose_cost(problem.objectives(), &encodings);

    let mut penalties: Vec<PenaltyBlock> = Vec::new();
    for (k, decl) in problem.constraints().iter().enumerate() {
        let slack_name = format!("__slack{k}");
        let mut step = 1.0;
        let (penalty, slack_plan, description) = match &decl.form {
            ConstraintForm::Comparison(c) => {
                let lhs = c.lhs.substitute_all(&affine).reduce_idempotent(|_| true);
                let sub = Comparison::from_sides(&lhs, c.op, &Polynomial::constant(c.rhs));
                let precision = slack_precision(problem, decl, &sub.lhs, sub.rhs, config.slack_precision_policy);
                if !(precision > 0.0) {
                    return Err(CompileError::InvalidSlackPrecision(precision));
                }
                step = precision;
                // shift the source-level range by the constant moved to the rhs
                let shift = sub.rhs - c.rhs;
                let known = domain_bounds(problem, &c.lhs).map(|(lo, hi)| (lo + shift, hi + shift));
                let (penalty, plan) = comparison_block(&sub, known, precision, &slack_name);
                (penalty, plan, format!("{} {} {}", c.lhs, c.op, c.rhs))
            }
            ConstraintForm::Boolean { kind, output, inputs } => {
                let z = single_bit(output).expect("validated boolean output");
                let ins: Vec<String> = inputs.iter().map(|i| single_bit(i).expect("validated boolean input")).collect();
                let ins: Vec<&str> = ins.iter().map(String::as_str).collect();
                let aux_bit = format!("{slack_name}#0");
                let (penalty, aux) = boolean_penalty(*kind, &z, &ins, &aux_bit);
                let plan = aux.map(|name| EncodingPlan {
                    source: slack_name.clone(),
                    binaries: vec![(name, 1.0)],
                    offset: 0.0,
                    induced: Vec::new(),
                });
                (penalty, plan, format!("{output} = {kind}({})", inputs.join(", ")))
            }
        };
        penalties.push(PenaltyBlock {
            source: PenaltySource::Constraint { index: k },
            description,
            penalty,
            lambda: 0.0,
            hardness: decl.hardness,
            slack_plan,
            slack_precision: step,
        });
    }
    for plan in &encodings {
        for (j, c) in plan.induced.iter().enumerate() {
            let slack_name = format!("__slack_{}_{j}", plan.source);
            // induced constraints are integral over their own bits
            let (penalty, slack_plan) = comparison_block(c, None, 1.0, &slack_name);
            penalties.push(PenaltyBlock {
                source: PenaltySource::Encoding { variable: plan.source.clone(), index: j },
                description: c.to_string(),
                penalty,
                lambda: 0.0,
                hardness: Hardness::Hard,
                slack_plan,
                slack_precision: 1.0,
            });
        }
    }

    let lambdas = estimate_all(&config.lambda_method, &cost, &penalties)?;
    for (block, raw) in penalties.iter_mut().zip(lambdas) {
        let multiplier = match (&config.lambda_method, block.hardness) {
            (LambdaMethod::Manual(_), _) => 1.0,
            (_, Hardness::Hard) => config.hard_multiplier,
            (_, Hardness::Weak) => config.weak_multiplier,
        };
        block.lambda = raw * multiplier;
    }
    Ok(assemble(cost, encodings, penalties, config.clone()))
}

fn estimate_all(method: &LambdaMethod, cost: &Polynomial, blocks: &[PenaltyBlock]) -> Result<Vec<f64>, CompileError> {
    if let LambdaMethod::Manual(values) = method {
        for &v in values {
            if !(v > 0.0 && v.is_finite()) {
                return Err(LambdaError::ManualValue(v).into());
            }
        }
        return match values.len() {
            1 => Ok(vec![values[0]; blocks.len()]),
            n if n == blocks.len() => Ok(values.clone()),
            n => Err(LambdaError::ManualCount { expected: blocks.len(), got: n }.into()),
        };
    }
    if method.is_per_constraint() {
        blocks
            .iter()
            .map(|b| Ok(sanitize(estimate_lambda(method, cost, &b.penalty)?, &b.description)))
            .collect()
    } else {
        let shared = sanitize(estimate_lambda(method, cost, &Polynomial::zero())?, "all constraints");
        Ok(vec![shared; blocks.len()])
    }
}

fn assemble(cost: Polynomial, encodings: Vec<EncodingPlan>, penalties: Vec<PenaltyBlock>, config: CompileConfig) -> QuboModel {
    let mut total = cost.clone();
    for block in &penalties {
        total = &total + &block.penalty.scale(block.lambda);
    }
    let (reduced, aux_registry) = quadratize(&total, config.penalty_scale, "__aux");
    let offset = reduced.constant_term();
    QuboModel { quadratic: reduced.without_constant(), offset, encodings, penalties, aux_registry, cost, config }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn example_three() -> Problem {
        let mut p = Problem::new();
        p.add_binary("a").unwrap();
        p.add_discrete("b", &[-1.0, 1.0, 3.0]).unwrap();
        p.add_continuous("c", -2.0, 2.0, 0.25).unwrap();
        p.add_objective("a + b*c + c**2", Direction::Minimize, 1.0).unwrap();
        p.add_constraint("b + c >= 2").unwrap();
        p
    }

    #[test]
    fn example_three_cost_shape() {
        let p = example_three();
        let enc: Vec<EncodingPlan> = p.variables().iter().map(|v| encode(v).unwrap()).collect();
        let cost = compose_cost(p.objectives(), &enc);
        assert_eq!(cost.constant_term(), 4.0);
        assert_eq!(cost.len(), 35);
        let max = cost.terms().filter(|(m, _)| !m.is_constant()).map(|(_, c)| c).fold(f64::MIN, f64::max);
        assert_eq!(max, 6.0);
        assert_eq!(cost.coefficient(&crate::expression::Monomial::from_vars(["b#2", "c#3"])), 6.0);
    }

    #[test]
    fn example_three_lambdas() {
        let p = example_three();
        let shared = |m: LambdaMethod| compile(&p, &CompileConfig::with_lambda(m)).unwrap().lambdas();
        assert_eq!(shared(LambdaMethod::Mqc), vec![10.0, 10.0]);
        assert_eq!(shared(LambdaMethod::Vlm), vec![12.0, 12.0]);
        assert_eq!(shared(LambdaMethod::UbNaive), vec![52.25, 52.25]);
        let momc = shared(LambdaMethod::Momc);
        assert!((momc[0] - 6.19).abs() < 0.01 && momc[1] == 12.0, "{momc:?}");
        assert_eq!(shared(LambdaMethod::Moc), vec![1.0, 6.0]);
        assert_eq!(shared(LambdaMethod::UbPosiform), vec![66.1875, 66.1875]);
    }

    #[test]
    fn example_three_binary_count_and_slack() {
        let m = compile(&example_three(), &CompileConfig::default()).unwrap();
        assert_eq!(m.num_binaries(), 13);
        assert!(m.aux_registry.is_empty());
        let slack = m.penalties[0].slack_plan.as_ref().unwrap();
        assert_eq!(slack.weights(), vec![0.25, 0.5, 1.0, 1.25]);
        assert_eq!(slack.offset, -3.0);
        assert_eq!(m.binaries().into_iter().collect::<BTreeSet<_>>().len(), 13);
    }

    #[test]
    fn unconstrained_single_binary() {
        let mut p = Problem::new();
        p.add_binary("b").unwrap();
        p.add_objective("b", Direction::Minimize, 1.0).unwrap();
        let m = compile(&p, &CompileConfig::default()).unwrap();
        assert_eq!(m.quadratic.to_string(), "b#0");
        assert_eq!(m.offset, 0.0);
    }

    #[test]
    fn maximize_flips_sign() {
        let mut p = Problem::new();
        p.add_binary_array("obj", &[2]).unwrap();
        p.add_objective("5*obj_0 + 10*obj_1", Direction::Maximize, 1.0).unwrap();
        let enc: Vec<EncodingPlan> = p.variables().iter().map(|v| encode(v).unwrap()).collect();
        assert_eq!(compose_cost(p.objectives(), &enc).to_string(), "-5*obj_0#0 - 10*obj_1#0");
    }

    #[test]
    fn manual_lambda_counts() {
        let p = example_three();
        let m = compile(&p, &CompileConfig::with_lambda(LambdaMethod::Manual(vec![2.0, 3.0]))).unwrap();
        assert_eq!(m.lambdas(), vec![2.0, 3.0]);
        let err = compile(&p, &CompileConfig::with_lambda(LambdaMethod::Manual(vec![1.0, 2.0, 3.0])));
        assert!(matches!(err, Err(CompileError::Lambda(LambdaError::ManualCount { .. }))));
    }

    #[test]
    fn weak_constraints_use_weak_multiplier() {
        let mut p = example_three();
        let c = crate::expression::parse_constraint("a = 1", &p.clone()).unwrap();
        p.add_constraint_decl(ConstraintDecl::hard(c).weak()).unwrap();
        let m = compile(&p, &CompileConfig::default()).unwrap();
        assert!((m.penalties[1].lambda - 12.0 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn relambda_rebuilds_energy() {
        let m = compile(&example_three(), &CompileConfig::default()).unwrap();
        let m2 = m.with_lambdas(&[1.0, 1.0]).unwrap();
        assert_eq!(m2.lambdas(), vec![1.0, 1.0]);
        assert_ne!(m2.quadratic, m.quadratic);
        assert!(m.with_lambdas(&[1.0]).is_err());
    }
}
