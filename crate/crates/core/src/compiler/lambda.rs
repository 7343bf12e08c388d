//! Penalty weight estimation. Every method bounds how much the objective can
//! gain by violating a constraint; the returned value is the multiplier put in
//! front of a penalty block before any hard/weak scaling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::expression::Polynomial;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method", content = "values")]
#[derive(Default)]
pub enum LambdaMethod {
    UbPositive,
    Mqc,
    #[default]
    Vlm,
    Momc,
    Moc,
    UbNaive,
    UbPosiform,
    /// One value for every block, or one per block in compile order.
    Manual(Vec<f64>),
}

impl LambdaMethod {
    /// Methods that produce a separate value for each constraint.
    pub fn is_per_constraint(&self) -> bool {
        matches!(self, LambdaMethod::Momc | LambdaMethod::Moc)
    }
}


impl fmt::Display for LambdaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaMethod::UbPositive => f.write_str("ub-positive"),
            LambdaMethod::Mqc => f.write_str("mqc"),
            LambdaMethod::Vlm => f.write_str("vlm"),
            LambdaMethod::Momc => f.write_str("momc"),
            LambdaMethod::Moc => f.write_str("moc"),
            LambdaMethod::UbNaive => f.write_str("ub-naive"),
            LambdaMethod::UbPosiform => f.write_str("ub-posiform"),
            LambdaMethod::Manual(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "manual:{}", parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown lambda method `{0}`")]
pub struct UnknownLambdaMethod(pub String);

impl FromStr for LambdaMethod {
    type Err = UnknownLambdaMethod;

    /// Accepts the kebab-case names plus `manual:1,2.5` or a bare number.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || UnknownLambdaMethod(s.to_string());
        Ok(match s {
            "ub-positive" => LambdaMethod::UbPositive,
            "mqc" => LambdaMethod::Mqc,
            "vlm" => LambdaMethod::Vlm,
            "momc" => LambdaMethod::Momc,
            "moc" => LambdaMethod::Moc,
            "ub-naive" => LambdaMethod::UbNaive,
            "ub-posiform" => LambdaMethod::UbPosiform,
            other => {
                let list = other.strip_prefix("manual:").unwrap_or(other);
                let values = list
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err())?;
                if values.is_empty() {
                    return Err(err());
                }
                LambdaMethod::Manual(values)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LambdaError {
    #[error("ub-positive needs non-negative coefficients, found {coefficient} on `{monomial}`")]
    MixedSign { monomial: String, coefficient: f64 },
    #[error("manual lambda expects 1 or {expected} values, got {got}")]
    ManualCount { expected: usize, got: usize },
    #[error("manual lambda values must be positive and finite, got {0}")]
    ManualValue(f64),
}

/// Single-flip bounds per variable: `(d_plus, d_minus)` where `d_plus` is the
/// largest increase from setting the variable to 1 and `d_minus` the largest
/// increase from setting it to 0. Assumes a quadratic, multilinear input;
/// higher-degree terms are treated like couplings.
pub fn flip_bounds(p: &Polynomial) -> BTreeMap<String, (f64, f64)> {
    let mut out: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for (m, c) in p.terms() {
        match m.degree() {
            0 => {}
            1 => {
                let e = out.entry(m.vars()[0].clone()).or_default();
                e.0 += c;
                e.1 -= c;
            }
            _ => {
                for v in m.vars() {
                    let e = out.entry(v.clone()).or_default();
                    e.0 += c.max(0.0);
                    e.1 += (-c).max(0.0);
                }
            }
        }
    }
    out
}

pub fn ub_positive(p: &Polynomial) -> Result<f64, LambdaError> {
    let mut sum = 0.0;
    for (m, c) in p.terms() {
        if c < 0.0 {
            return Err(LambdaError::MixedSign { monomial: m.to_string(), coefficient: c });
        }
        sum += c;
    }
    Ok(sum)
}

/// Largest coefficient magnitude plus the offset.
pub fn mqc(p: &Polynomial) -> f64 {
    let max = p.terms().filter(|(m, _)| !m.is_constant()).map(|(_, c)| c.abs()).fold(0.0, f64::max);
    max + p.constant_term()
}

pub fn vlm(p: &Polynomial) -> f64 {
    flip_bounds(p).values().map(|&(up, down)| up.max(down)).fold(0.0, f64::max)
}

/// Smallest positive single-flip bound of a variable, if any.
fn min_positive(bounds: (f64, f64)) -> Option<f64> {
    [bounds.0, bounds.1].into_iter().filter(|&d| d > 1e-12).reduce(f64::min)
}

pub fn momc(objective: &Polynomial, penalty: &Polynomial) -> f64 {
    let denom = flip_bounds(penalty).into_values().filter_map(min_positive).reduce(f64::min);
    match denom {
        Some(d) => vlm(objective) / d,
        None => vlm(objective),
    }
}

pub fn moc(objective: &Polynomial, penalty: &Polynomial) -> f64 {
    let obj = flip_bounds(objective);
    let mut best = 0.0f64;
    for (v, pb) in flip_bounds(penalty) {
        let Some(den) = min_positive(pb) else { continue };
        let num = obj.get(&v).map(|&(up, down)| up.max(down).max(0.0)).unwrap_or(0.0);
        best = best.max(num / den);
    }
    best
}

/// Sum of coefficient magnitudes, offset excluded.
pub fn ub_naive(p: &Polynomial) -> f64 {
    p.terms().filter(|(m, _)| !m.is_constant()).map(|(_, c)| c.abs()).sum()
}

/// Upper bound from a posiform: each negative higher-order term `c*x*rest` is
/// rewritten as `c*x + |c|*x*(1 - rest)`, after which every term other than
/// the linear ones has a positive coefficient over literals.
fn posiform_upper(p: &Polynomial) -> f64 {
    let mut linear: BTreeMap<&str, f64> = BTreeMap::new();
    let mut bound = p.constant_term();
    for (m, c) in p.terms() {
        match m.degree() {
            0 => {}
            1 => *linear.entry(m.vars()[0].as_str()).or_default() += c,
            _ => {
                if c < 0.0 {
                    *linear.entry(m.vars()[0].as_str()).or_default() += c;
                }
                bound += c.abs();
            }
        }
    }
    bound + linear.values().map(|c| c.max(0.0)).sum::<f64>()
}

/// Posiform upper bound minus negaform lower bound.
pub fn ub_posiform(p: &Polynomial) -> f64 {
    let upper = posiform_upper(p);
    let lower = -posiform_upper(&-p);
    upper - lower
}

/// Raw estimate for one penalty block.
pub fn estimate_lambda(method: &LambdaMethod, objective: &Polynomial, penalty: &Polynomial) -> Result<f64, LambdaError> {
    Ok(match method {
        LambdaMethod::UbPositive => ub_positive(objective)?,
        LambdaMethod::Mqc => mqc(objective),
        LambdaMethod::Vlm => vlm(objective),
        LambdaMethod::Momc => momc(objective, penalty),
        LambdaMethod::Moc => moc(objective, penalty),
        LambdaMethod::UbNaive => ub_naive(objective),
        LambdaMethod::UbPosiform => ub_posiform(objective),
        LambdaMethod::Manual(v) => v[0],
    })
}

/// Replaces estimates that cannot serve as a weight with 1.
pub fn sanitize(lambda: f64, what: &str) -> f64 {
    if lambda.is_finite() && lambda > 0.0 {
        lambda
    } else {
        log::warn!("lambda estimate {lambda} for {what} is not positive; using 1");
        1.0
    }
}
