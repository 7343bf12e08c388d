//! User-facing problem declaration: variables, weighted objectives and
//! constraints.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expression::{parse_constraint, parse_expression, CmpOp, Comparison, ParseError, Polynomial, VarScope};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("variable `{0}` is already declared")]
    DuplicateName(String),
    #[error("invalid domain for `{name}`: {reason}")]
    InvalidDomain { name: String, reason: String },
    #[error("`{0}` is not a declared variable")]
    UndeclaredVariable(String),
    #[error("boolean relation uses `{0}`, which is not a unipolar binary variable")]
    NonBinaryBoolean(String),
    #[error("boolean `{kind}` expects {expected} input(s), got {got}")]
    BooleanArity { kind: BoolKind, expected: usize, got: usize },
    #[error("objective weight must be finite and positive, got {0}")]
    InvalidWeight(f64),
    #[error("slack precision must be positive, got {0}")]
    InvalidSlackPrecision(f64),
    #[error("array shape must have one or two non-zero dimensions, got {0:?}")]
    InvalidShape(Vec<usize>),
    #[error("a problem needs at least one objective")]
    NoObjective,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Method used to turn a continuous variable into binaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ContinuousEncoding {
    Dictionary,
    Logarithmic {
        #[serde(default = "default_base")]
        base: f64,
    },
    Unitary,
    ArithmeticProgression,
    DomainWall,
    BoundedCoefficient { bound: f64 },
}

fn default_base() -> f64 {
    2.0
}

impl Default for ContinuousEncoding {
    fn default() -> Self {
        ContinuousEncoding::Logarithmic { base: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VariableKind {
    /// Takes values in {0, 1}.
    BinaryUnipolar,
    /// Takes values in {-1, 1}.
    BinaryBipolar,
    Discrete { levels: Vec<f64> },
    Continuous {
        lo: f64,
        hi: f64,
        precision: f64,
        encoding: ContinuousEncoding,
    },
}

impl VariableKind {
    fn validate(&self, name: &str) -> Result<(), ProblemError> {
        let bad = |reason: String| ProblemError::InvalidDomain { name: name.to_string(), reason };
        match self {
            VariableKind::BinaryUnipolar | VariableKind::BinaryBipolar => Ok(()),
            VariableKind::Discrete { levels } => {
                if levels.is_empty() {
                    return Err(bad("no levels given".into()));
                }
                if levels.iter().any(|l| !l.is_finite()) {
                    return Err(bad("levels must be finite".into()));
                }
                let mut sorted = levels.clone();
                sorted.sort_by(f64::total_cmp);
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(bad("levels must be distinct".into()));
                }
                Ok(())
            }
            VariableKind::Continuous { lo, hi, precision, .. } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(bad(format!("need lo < hi, got [{lo}, {hi}]")));
                }
                if !(precision.is_finite() && *precision > 0.0 && *precision <= hi - lo) {
                    return Err(bad(format!("precision {precision} must be in (0, {}]", hi - lo)));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableDecl {
    pub name: String,
    pub kind: VariableKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveTerm {
    pub expr: Polynomial,
    pub direction: Direction,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardness {
    #[default]
    Hard,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoolKind {
    Not,
    And,
    Or,
    Xor,
}

impl BoolKind {
    pub fn arity(self) -> usize {
        match self {
            BoolKind::Not => 1,
            _ => 2,
        }
    }

    /// Truth-table value of the relation.
    pub fn apply(self, inputs: &[bool]) -> bool {
        match self {
            BoolKind::Not => !inputs[0],
            BoolKind::And => inputs.iter().all(|&x| x),
            BoolKind::Or => inputs.iter().any(|&x| x),
            BoolKind::Xor => inputs.iter().filter(|&&x| x).count() % 2 == 1,
        }
    }
}

impl std::fmt::Display for BoolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoolKind::Not => "not",
            BoolKind::And => "and",
            BoolKind::Or => "or",
            BoolKind::Xor => "xor",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintForm {
    Comparison(Comparison),
    /// `output = kind(inputs)` over unipolar binaries.
    Boolean {
        kind: BoolKind,
        output: String,
        inputs: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintDecl {
    pub form: ConstraintForm,
    pub hardness: Hardness,
    /// Step used to discretize the slack of an inequality.
    pub slack_precision: Option<f64>,
}

impl ConstraintDecl {
    pub fn hard(c: Comparison) -> Self {
        ConstraintDecl { form: ConstraintForm::Comparison(c), hardness: Hardness::Hard, slack_precision: None }
    }

    pub fn weak(mut self) -> Self {
        self.hardness = Hardness::Weak;
        self
    }

    pub fn with_slack_precision(mut self, p: f64) -> Self {
        self.slack_precision = Some(p);
        self
    }

    pub fn variables(&self) -> BTreeSet<String> {
        match &self.form {
            ConstraintForm::Comparison(c) => c.lhs.variables().into_iter().map(str::to_string).collect(),
            ConstraintForm::Boolean { output, inputs, .. } => {
                inputs.iter().cloned().chain(std::iter::once(output.clone())).collect()
            }
        }
    }
}

/// A complete optimization problem.
///
/// Built with the `add_*` methods, then handed to the compiler. Scalars
/// declared through an array form are named `name_i` (1-D) or `name_i_j`
/// (2-D).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Problem {
    variables: Vec<VariableDecl>,
    objectives: Vec<ObjectiveTerm>,
    constraints: Vec<ConstraintDecl>,
    index: HashMap<String, usize>,
}

impl VarScope for Problem {
    fn contains_var(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

impl Problem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn variables(&self) -> &[VariableDecl] {
        &self.variables
    }

    pub fn objectives(&self) -> &[ObjectiveTerm] {
        &self.objectives
    }

    pub fn constraints(&self) -> &[ConstraintDecl] {
        &self.constraints
    }

    pub fn variable(&self, name: &str) -> Option<&VariableDecl> {
        self.index.get(name).map(|&i| &self.variables[i])
    }

    pub fn add_variable(&mut self, decl: VariableDecl) -> Result<String, ProblemError> {
        if self.index.contains_key(&decl.name) {
            return Err(ProblemError::DuplicateName(decl.name));
        }
        if decl.name.is_empty() || !decl.name.chars().all(|c| c.is_alphanumeric() || c == '_') || decl.name.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(ProblemError::InvalidDomain {
                name: decl.name,
                reason: "names must be identifiers made of letters, digits and `_`".into(),
            });
        }
        if decl.name.starts_with("__") {
            return Err(ProblemError::InvalidDomain {
                name: decl.name,
                reason: "names starting with `__` are reserved for generated binaries".into(),
            });
        }
        decl.kind.validate(&decl.name)?;
        let name = decl.name.clone();
        self.index.insert(name.clone(), self.variables.len());
        self.variables.push(decl);
        Ok(name)
    }

    pub fn add_binary(&mut self, name: &str) -> Result<String, ProblemError> {
        self.add_variable(VariableDecl { name: name.into(), kind: VariableKind::BinaryUnipolar })
    }

    pub fn add_spin(&mut self, name: &str) -> Result<String, ProblemError> {
        self.add_variable(VariableDecl { name: name.into(), kind: VariableKind::BinaryBipolar })
    }

    pub fn add_discrete(&mut self, name: &str, levels: &[f64]) -> Result<String, ProblemError> {
        self.add_variable(VariableDecl { name: name.into(), kind: VariableKind::Discrete { levels: levels.to_vec() } })
    }

    /// Continuous variable with the default logarithmic base-2 encoding.
    pub fn add_continuous(&mut self, name: &str, lo: f64, hi: f64, precision: f64) -> Result<String, ProblemError> {
        self.add_continuous_with(name, lo, hi, precision, ContinuousEncoding::default())
    }

    pub fn add_continuous_with(
        &mut self,
        name: &str,
        lo: f64,
        hi: f64,
        precision: f64,
        encoding: ContinuousEncoding,
    ) -> Result<String, ProblemError> {
        self.add_variable(VariableDecl { name: name.into(), kind: VariableKind::Continuous { lo, hi, precision, encoding } })
    }

    /// Declares `shape`-many scalars sharing `kind`.
    pub fn add_variable_array(&mut self, name: &str, shape: &[usize], kind: VariableKind) -> Result<Vec<String>, ProblemError> {
        let names = array_names(name, shape)?;
        kind.validate(name)?;
        if let Some(dup) = names.iter().find(|n| self.index.contains_key(*n)) {
            return Err(ProblemError::DuplicateName(dup.clone()));
        }
        for n in &names {
            self.add_variable(VariableDecl { name: n.clone(), kind: kind.clone() })?;
        }
        Ok(names)
    }

    pub fn add_binary_array(&mut self, name: &str, shape: &[usize]) -> Result<Vec<String>, ProblemError> {
        self.add_variable_array(name, shape, VariableKind::BinaryUnipolar)
    }

    pub fn add_continuous_array(
        &mut self,
        name: &str,
        shape: &[usize],
        lo: f64,
        hi: f64,
        precision: f64,
    ) -> Result<Vec<String>, ProblemError> {
        let kind = VariableKind::Continuous { lo, hi, precision, encoding: ContinuousEncoding::default() };
        self.add_variable_array(name, shape, kind)
    }

    /// Parses `expr` over the declared variables and appends it as an
    /// objective term.
    pub fn add_objective(&mut self, expr: &str, direction: Direction, weight: f64) -> Result<(), ProblemError> {
        let poly = parse_expression(expr, self)?;
        self.add_objective_poly(poly, direction, weight)
    }

    pub fn add_objective_poly(&mut self, expr: Polynomial, direction: Direction, weight: f64) -> Result<(), ProblemError> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(ProblemError::InvalidWeight(weight));
        }
        self.check_declared(expr.variables())?;
        self.objectives.push(ObjectiveTerm { expr, direction, weight });
        Ok(())
    }

    /// Parses a comparison such as `"b + c >= 2"` and adds it as a hard
    /// constraint.
    pub fn add_constraint(&mut self, text: &str) -> Result<(), ProblemError> {
        let c = parse_constraint(text, self)?;
        self.add_constraint_decl(ConstraintDecl::hard(c))
    }

    pub fn add_boolean(&mut self, kind: BoolKind, output: &str, inputs: &[&str], hardness: Hardness) -> Result<(), ProblemError> {
        self.add_constraint_decl(ConstraintDecl {
            form: ConstraintForm::Boolean {
                kind,
                output: output.into(),
                inputs: inputs.iter().map(|s| s.to_string()).collect(),
            },
            hardness,
            slack_precision: None,
        })
    }

    pub fn add_constraint_decl(&mut self, decl: ConstraintDecl) -> Result<(), ProblemError> {
        if let Some(p) = decl.slack_precision {
            if !(p.is_finite() && p > 0.0) {
                return Err(ProblemError::InvalidSlackPrecision(p));
            }
        }
        let vars = decl.variables();
        self.check_declared(vars.iter().map(String::as_str))?;
        if let ConstraintForm::Boolean { kind, inputs, .. } = &decl.form {
            if inputs.len() != kind.arity() {
                return Err(ProblemError::BooleanArity { kind: *kind, expected: kind.arity(), got: inputs.len() });
            }
            for v in &vars {
                if self.variable(v).map(|d| &d.kind) != Some(&VariableKind::BinaryUnipolar) {
                    return Err(ProblemError::NonBinaryBoolean(v.clone()));
                }
            }
        }
        self.constraints.push(decl);
        Ok(())
    }

    fn check_declared<'a>(&self, vars: impl IntoIterator<Item = &'a str>) -> Result<(), ProblemError> {
        for v in vars {
            if !self.index.contains_key(v) {
                return Err(ProblemError::UndeclaredVariable(v.to_string()));
            }
        }
        Ok(())
    }

    /// Checks the whole problem: at least one objective and every referenced
    /// identifier declared.
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.objectives.is_empty() {
            return Err(ProblemError::NoObjective);
        }
        for o in &self.objectives {
            self.check_declared(o.expr.variables())?;
        }
        for c in &self.constraints {
            let vars = c.variables();
            self.check_declared(vars.iter().map(String::as_str))?;
        }
        Ok(())
    }

    /// Minimum precision among continuous variables referenced by the
    /// constraint, if any.
    pub fn min_continuous_precision(&self, c: &ConstraintDecl) -> Option<f64> {
        c.variables()
            .iter()
            .filter_map(|v| match self.variable(v).map(|d| &d.kind) {
                Some(VariableKind::Continuous { precision, .. }) => Some(*precision),
                _ => None,
            })
            .min_by(f64::total_cmp)
    }
}

/// Names produced by an array declaration of the given shape.
pub fn array_names(name: &str, shape: &[usize]) -> Result<Vec<String>, ProblemError> {
    match shape {
        [m] if *m > 0 => Ok((0..*m).map(|i| format!("{name}_{i}")).collect()),
        [m, n] if *m > 0 && *n > 0 => Ok((0..*m).flat_map(|i| (0..*n).map(move |j| format!("{name}_{i}_{j}"))).collect()),
        _ => Err(ProblemError::InvalidShape(shape.to_vec())),
    }
}

/// True when the constraint can never be violated (e.g. `x = x`).
pub fn is_trivial(c: &Comparison) -> bool {
    c.lhs.is_zero()
        && match c.op {
            CmpOp::Eq => c.rhs == 0.0,
            CmpOp::Ge => c.rhs <= 0.0,
            CmpOp::Gt => c.rhs < 0.0,
            CmpOp::Le => c.rhs >= 0.0,
            CmpOp::Lt => c.rhs > 0.0,
        }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_declarations() {
        let mut p = Problem::new();
        p.add_binary("a").unwrap();
        p.add_discrete("b", &[-1.0, 1.0, 3.0]).unwrap();
        p.add_continuous("c", -2.0, 2.0, 0.25).unwrap();
        p.add_objective("a + b*c + c**2", Direction::Minimize, 1.0).unwrap();
        p.add_constraint("b + c >= 2").unwrap();
        p.validate().unwrap();
        assert_eq!(p.constraints()[0].hardness, Hardness::Hard);
        match &p.variable("c").unwrap().kind {
            VariableKind::Continuous { encoding, .. } => assert_eq!(*encoding, ContinuousEncoding::Logarithmic { base: 2.0 }),
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn arrays_flatten_to_scalars() {
        let mut p = Problem::new();
        let names = p.add_binary_array("obj", &[4]).unwrap();
        assert_eq!(names, ["obj_0", "obj_1", "obj_2", "obj_3"]);
        let mut q = Problem::new();
        for i in 0..4 {
            q.add_binary(&format!("obj_{i}")).unwrap();
        }
        assert_eq!(p, q);
        let grid = p.add_binary_array("m", &[2, 2]).unwrap();
        assert_eq!(grid, ["m_0_0", "m_0_1", "m_1_0", "m_1_1"]);
        assert!(matches!(p.add_binary_array("t", &[2, 2, 2]), Err(ProblemError::InvalidShape(_))));
    }

    #[test]
    fn declaration_errors() {
        let mut p = Problem::new();
        p.add_binary("x").unwrap();
        assert!(matches!(p.add_binary("x"), Err(ProblemError::DuplicateName(_))));
        assert!(matches!(p.add_continuous("c", 1.0, 1.0, 0.1), Err(ProblemError::InvalidDomain { .. })));
        assert!(matches!(p.add_continuous("c", 0.0, 1.0, 2.0), Err(ProblemError::InvalidDomain { .. })));
        assert!(matches!(p.add_discrete("d", &[]), Err(ProblemError::InvalidDomain { .. })));
        assert!(matches!(p.add_discrete("d", &[1.0, 1.0]), Err(ProblemError::InvalidDomain { .. })));
        p.add_discrete("single", &[-1.0]).unwrap();
        assert!(matches!(p.add_objective("x + y", Direction::Minimize, 1.0), Err(ProblemError::Parse(_))));
        assert!(matches!(p.add_objective("x", Direction::Minimize, 0.0), Err(ProblemError::InvalidWeight(_))));
        assert!(matches!(p.add_boolean(BoolKind::Or, "x", &["single", "x"], Hardness::Hard), Err(ProblemError::NonBinaryBoolean(_))));
        assert!(matches!(p.add_boolean(BoolKind::And, "x", &["x"], Hardness::Hard), Err(ProblemError::BooleanArity { .. })));
        assert!(matches!(Problem::new().validate(), Err(ProblemError::NoObjective)));
    }

    #[test]
    fn trivial_and_weak_constraints() {
        let mut p = Problem::new();
        for v in ["x", "y", "z"] {
            p.add_binary(v).unwrap();
        }
        p.add_objective("0", Direction::Minimize, 1.0).unwrap();
        p.add_constraint("x = x").unwrap();
        p.add_boolean(BoolKind::Or, "z", &["x", "y"], Hardness::Weak).unwrap();
        let ConstraintForm::Comparison(c) = &p.constraints()[0].form else { panic!() };
        assert!(is_trivial(c));
        assert_eq!(p.constraints()[1].hardness, Hardness::Weak);
    }
}
