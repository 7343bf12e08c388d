use std::fmt;

use serde::{Deserialize, Serialize};

use super::polynomial::{Monomial, Polynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
}

impl CmpOp {
    pub fn is_strict(self) -> bool {
        matches!(self, CmpOp::Gt | CmpOp::Lt)
    }

    pub fn is_inequality(self) -> bool {
        self != CmpOp::Eq
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
        })
    }
}

/// `lhs op rhs` with every variable on the left and a constant right side.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub lhs: Polynomial,
    pub op: CmpOp,
    pub rhs: f64,
}

impl Comparison {
    /// Normalizes `lhs op rhs` for arbitrary polynomial sides.
    pub fn from_sides(lhs: &Polynomial, op: CmpOp, rhs: &Polynomial) -> Self {
        let diff = lhs - rhs;
        let constant = diff.constant_term();
        let mut lhs = diff;
        lhs.add_term(Monomial::one(), -constant);
        let rhs = if constant == 0.0 { 0.0 } else { -constant };
        Comparison { lhs, op, rhs }
    }

    /// Amount by which `value` (the evaluated lhs) misses the constraint.
    /// Strict comparisons measure against the bound tightened by `step`.
    pub fn residual(&self, value: f64, step: f64) -> f64 {
        match self.op {
            CmpOp::Eq => (value - self.rhs).abs(),
            CmpOp::Ge => (self.rhs - value).max(0.0),
            CmpOp::Gt => (self.rhs + step - value).max(0.0),
            CmpOp::Le => (value - self.rhs).max(0.0),
            CmpOp::Lt => (value - (self.rhs - step)).max(0.0),
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs.to_exact_string(), self.op, self.rhs)
    }
}

impl Serialize for Comparison {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Comparison {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_constraint(&text, &super::AnyVar).map_err(serde::de::Error::custom)
    }
}
