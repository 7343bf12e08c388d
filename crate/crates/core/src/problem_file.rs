//! JSON problem documents (`qubo-forge-problem/1`).
//!
//! ```json
//! {
//!   "schema": "qubo-forge-problem/1",
//!   "variables": [
//!     {"name": "a", "kind": "binary"},
//!     {"name": "b", "kind": "discrete", "levels": [-1, 1, 3]},
//!     {"name": "c", "kind": "continuous", "lo": -2, "hi": 2, "precision": 0.25},
//!     {"name": "x", "kind": "binary", "shape": [3]}
//!   ],
//!   "objectives": [{"expr": "a + b*c + c**2", "direction": "minimize"}],
//!   "constraints": [
//!     {"expr": "b + c >= 2"},
//!     {"relation": "and", "output": "x_2", "inputs": ["x_0", "x_1"], "hardness": "weak"}
//!   ]
//! }
//! ```
//!
//! Variable kinds are `binary` (alias `binary-unipolar`), `spin` (alias
//! `binary-bipolar`), `discrete` and `continuous`. A `shape` turns the entry
//! into an array of scalars named `name_i` or `name_i_j`. Continuous entries
//! take an optional `encoding` object such as `{"method": "unitary"}`.
//! The optional `solver` section carries defaults for the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::problem::{
    BoolKind, ConstraintDecl, ConstraintForm, ContinuousEncoding, Direction, Hardness, Problem, ProblemError, VariableKind,
};

pub const PROBLEM_SCHEMA: &str = "qubo-forge-problem/1";

#[derive(Debug, Error)]
pub enum ProblemFileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed problem json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported problem schema `{found}` (expected `{PROBLEM_SCHEMA}`)")]
    Schema { found: String },
    #[error("variable `{name}`: unknown kind `{kind}`")]
    UnknownKind { name: String, kind: String },
    #[error("variable `{name}`: missing field `{field}`")]
    MissingField { name: String, field: &'static str },
    #[error("constraint {index}: give either `expr` or `relation` with `output` and `inputs`")]
    BadConstraint { index: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VariableEntry {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<ContinuousEncoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveEntry {
    pub expr: String,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstraintEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<BoolKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<String>>,
    #[serde(default)]
    pub hardness: Hardness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack_precision: Option<f64>,
}

/// Solver defaults stored next to a problem. Every field is optional;
/// command-line flags take precedence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_update: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    pub schema: String,
    pub variables: Vec<VariableEntry>,
    pub objectives: Vec<ObjectiveEntry>,
    #[serde(default)]
    pub constraints: Vec<ConstraintEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
}

impl VariableEntry {
    fn kind(&self) -> Result<VariableKind, ProblemFileError> {
        let missing = |field| ProblemFileError::MissingField { name: self.name.clone(), field };
        Ok(match self.kind.as_str() {
            "binary" | "binary-unipolar" => VariableKind::BinaryUnipolar,
            "spin" | "binary-bipolar" => VariableKind::BinaryBipolar,
            "discrete" => VariableKind::Discrete { levels: self.levels.clone().ok_or_else(|| missing("levels"))? },
            "continuous" => VariableKind::Continuous {
                lo: self.lo.ok_or_else(|| missing("lo"))?,
                hi: self.hi.ok_or_else(|| missing("hi"))?,
                precision: self.precision.ok_or_else(|| missing("precision"))?,
                encoding: self.encoding.clone().unwrap_or_default(),
            },
            other => return Err(ProblemFileError::UnknownKind { name: self.name.clone(), kind: other.to_string() }),
        })
    }

    fn from_kind(name: &str, kind: &VariableKind) -> Self {
        let mut e = VariableEntry { name: name.to_string(), ..Default::default() };
        match kind {
            VariableKind::BinaryUnipolar => e.kind = "binary".into(),
            VariableKind::BinaryBipolar => e.kind = "spin".into(),
            VariableKind::Discrete { levels } => {
                e.kind = "discrete".into();
                e.levels = Some(levels.clone());
            }
            VariableKind::Continuous { lo, hi, precision, encoding } => {
                e.kind = "continuous".into();
                e.lo = Some(*lo);
                e.hi = Some(*hi);
                e.precision = Some(*precision);
                e.encoding = Some(encoding.clone());
            }
        }
        e
    }
}

impl ProblemDocument {
    /// Builds the problem, declaring variables first so that expressions can
    /// refer to any of them.
    pub fn to_problem(&self) -> Result<Problem, ProblemFileError> {
        let mut p = Problem::new();
        for v in &self.variables {
            let kind = v.kind()?;
            match &v.shape {
                Some(shape) => {
                    p.add_variable_array(&v.name, shape, kind)?;
                }
                None => {
                    p.add_variable(crate::problem::VariableDecl { name: v.name.clone(), kind })?;
                }
            }
        }
        for o in &self.objectives {
            p.add_objective(&o.expr, o.direction, o.weight)?;
        }
        for (index, c) in self.constraints.iter().enumerate() {
            let decl = match (&c.expr, c.relation, &c.output, &c.inputs) {
                (Some(expr), None, None, None) => {
                    let cmp = crate::expression::parse_constraint(expr, &p).map_err(ProblemError::from)?;
                    ConstraintDecl { form: ConstraintForm::Comparison(cmp), hardness: c.hardness, slack_precision: c.slack_precision }
                }
                (None, Some(kind), Some(output), Some(inputs)) => ConstraintDecl {
                    form: ConstraintForm::Boolean { kind, output: output.clone(), inputs: inputs.clone() },
                    hardness: c.hardness,
                    slack_precision: c.slack_precision,
                },
                _ => return Err(ProblemFileError::BadConstraint { index }),
            };
            p.add_constraint_decl(decl)?;
        }
        Ok(p)
    }

    /// Document describing `problem`. Arrays are written as their scalars and
    /// coefficients in their exact form, so loading gives back an equal problem.
    pub fn from_problem(problem: &Problem) -> Self {
        let variables = problem.variables().iter().map(|v| VariableEntry::from_kind(&v.name, &v.kind)).collect();
        let objectives = problem
            .objectives()
            .iter()
            .map(|o| ObjectiveEntry { expr: o.expr.to_exact_string(), direction: o.direction, weight: o.weight })
            .collect();
        let constraints = problem
            .constraints()
            .iter()
            .map(|c| {
                let mut e = ConstraintEntry { hardness: c.hardness, slack_precision: c.slack_precision, ..Default::default() };
                match &c.form {
                    ConstraintForm::Comparison(cmp) => e.expr = Some(cmp.to_string()),
                    ConstraintForm::Boolean { kind, output, inputs } => {
                        e.relation = Some(*kind);
                        e.output = Some(output.clone());
                        e.inputs = Some(inputs.clone());
                    }
                }
                e
            })
            .collect();
        ProblemDocument { schema: PROBLEM_SCHEMA.to_string(), variables, objectives, constraints, solver: None }
    }

    pub fn from_json(text: &str) -> Result<Self, ProblemFileError> {
        let value: Value = serde_json::from_str(text)?;
        let found = value.get("schema").and_then(Value::as_str).unwrap_or("<missing>");
        if found != PROBLEM_SCHEMA {
            return Err(ProblemFileError::Schema { found: found.to_string() });
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

/// Reads a problem file, returning the problem and its solver section.
pub fn load_problem(path: &Path) -> Result<(Problem, Option<SolverSection>), ProblemFileError> {
    let doc = ProblemDocument::from_json(&std::fs::read_to_string(path)?)?;
    Ok((doc.to_problem()?, doc.solver))
}

pub fn save_problem(path: &Path, problem: &Problem, solver: Option<SolverSection>) -> Result<(), ProblemFileError> {
    let mut doc = ProblemDocument::from_problem(problem);
    doc.solver = solver;
    std::fs::write(path, doc.to_json())?;
    Ok(())
}
