//! Constraint-to-penalty conversions. Every penalty is a polynomial over
//! binaries that is non-negative everywhere and zero exactly where the
//! constraint holds (for the best choice of slack or auxiliary bits).

use std::collections::BTreeSet;

use crate::encoding::{encode_continuous, EncodingPlan};
use crate::expression::{CmpOp, Comparison, Monomial, Polynomial};
use crate::problem::{BoolKind, ContinuousEncoding};

/// Range `[min, max]` a multilinear polynomial over binaries can take,
/// from per-term interval arithmetic.
pub fn binary_bounds(p: &Polynomial) -> (f64, f64) {
    let mut lo = p.constant_term();
    let mut hi = lo;
    for (m, c) in p.terms() {
        if !m.is_constant() {
            lo += c.min(0.0);
            hi += c.max(0.0);
        }
    }
    (lo, hi)
}

fn square_reduced(p: &Polynomial) -> Polynomial {
    p.pow(2).reduce_idempotent(|_| true)
}

/// `(lhs - rhs)^2` with `b^2 = b` applied. Assumes every variable is binary.
pub fn equality_penalty(c: &Comparison) -> Polynomial {
    debug_assert_eq!(c.op, CmpOp::Eq);
    let shifted = &c.lhs - &Polynomial::constant(c.rhs);
    square_reduced(&shifted)
}

/// Penalty for an inequality plus the plan of the slack variable it
/// introduced (if any).
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityPenalty {
    pub penalty: Polynomial,
    pub slack: Option<EncodingPlan>,
    /// False when no binary assignment can satisfy the constraint.
    pub satisfiable: bool,
}

/// `x - y >= 0` (or `y - x <= 0`) over two binaries: returns `(x, y)`.
fn binary_ordering(c: &Comparison) -> Option<(String, String)> {
    if c.rhs != 0.0 || c.lhs.len() != 2 || c.lhs.degree() != 1 {
        return None;
    }
    let mut pos = None;
    let mut neg = None;
    for (m, coeff) in c.lhs.terms() {
        let v = m.vars()[0].clone();
        match coeff {
            x if x == 1.0 => pos = Some(v),
            x if x == -1.0 => neg = Some(v),
            _ => return None,
        }
    }
    let (pos, neg) = (pos?, neg?);
    match c.op {
        CmpOp::Ge => Some((pos, neg)),
        CmpOp::Le => Some((neg, pos)),
        _ => None,
    }
}

/// Converts `lhs op rhs` (over binaries) into `(lhs + s - rhs)^2` where `s`
/// is a fresh slack encoded logarithmically at `precision`.
///
/// For `>=` the slack spans `[-(max(lhs) - rhs), 0]`; for `<=` it spans
/// `[0, rhs - min(lhs)]`. Strict comparisons are tightened by one
/// `precision` step. The pairwise ordering `x >= y` over binaries gets the
/// slack-free penalty `y - x*y`.
pub fn inequality_to_penalty(c: &Comparison, precision: f64, slack_name: &str) -> InequalityPenalty {
    inequality_to_penalty_within(c, None, precision, slack_name)
}

/// As [`inequality_to_penalty`], with an extra known range of the lhs (e.g.
/// from the source variables' domains) that tightens the slack.
pub fn inequality_to_penalty_within(
    c: &Comparison,
    known: Option<(f64, f64)>,
    precision: f64,
    slack_name: &str,
) -> InequalityPenalty {
    debug_assert!(c.op.is_inequality());
    if let Some((hi, lo)) = binary_ordering(c) {
        let y = Polynomial::var(lo.clone());
        let xy = Polynomial::term(Monomial::from_vars([hi, lo]), 1.0);
        return InequalityPenalty { penalty: &y - &xy, slack: None, satisfiable: true };
    }
    let (mut min, mut max) = binary_bounds(&c.lhs);
    if let Some((lo, hi)) = known {
        min = min.max(lo);
        max = max.min(hi);
    }
    let rhs = match c.op {
        CmpOp::Gt => c.rhs + precision,
        CmpOp::Lt => c.rhs - precision,
        _ => c.rhs,
    };
    let (span, satisfiable) = match c.op {
        CmpOp::Ge | CmpOp::Gt => (max - rhs, max - rhs >= -1e-9),
        _ => (rhs - min, rhs - min >= -1e-9),
    };
    // the slack only needs to reach multiples of the precision
    let span = (span.max(0.0) / precision + 1e-9).floor() * precision;
    if !satisfiable {
        log::warn!("constraint `{c}` is unsatisfiable over the encoded domain; penalty still emitted");
    }
    let slack = if span > 0.0 {
        let (lo, hi) = match c.op {
            CmpOp::Ge | CmpOp::Gt => (-span, 0.0),
            _ => (0.0, span),
        };
        let plan = encode_continuous(slack_name, lo, hi, precision.min(span), &ContinuousEncoding::default())
            .expect("slack range and precision are positive");
        Some(plan)
    } else {
        None
    };
    let mut residual = &c.lhs - &Polynomial::constant(rhs);
    if let Some(plan) = &slack {
        residual = &residual + &plan.affine();
    }
    InequalityPenalty { penalty: square_reduced(&residual), slack, satisfiable }
}

/// Quadratic gate penalty for `z = kind(inputs)` over binaries. XOR needs
/// one auxiliary binary, which is returned alongside.
pub fn boolean_penalty(kind: BoolKind, z: &str, inputs: &[&str], aux: &str) -> (Polynomial, Option<String>) {
    let v = |n: &str| Polynomial::var(n);
    let prod = |a: &str, b: &str| Polynomial::term(Monomial::from_vars([a, b]), 1.0);
    match kind {
        BoolKind::Not => {
            let x = inputs[0];
            let p = &(&v(x) + &v(z)) - &Polynomial::constant(1.0);
            (square_reduced(&p), None)
        }
        BoolKind::And => {
            let (x, y) = (inputs[0], inputs[1]);
            // xy - 2(x + y)z + 3z
            let p = &(&prod(x, y) - &(&prod(x, z) + &prod(y, z)).scale(2.0)) + &v(z).scale(3.0);
            (p, None)
        }
        BoolKind::Or => {
            let (x, y) = (inputs[0], inputs[1]);
            // xy + x + y - 2xz - 2yz + z
            let linear = &(&v(x) + &v(y)) + &v(z);
            let p = &(&prod(x, y) + &linear) - &(&prod(x, z) + &prod(y, z)).scale(2.0);
            (p, None)
        }
        BoolKind::Xor => {
            let (x, y) = (inputs[0], inputs[1]);
            // (x + y + z - 2w)^2 vanishes iff x + y + z is even
            let p = &(&(&v(x) + &v(y)) + &v(z)) - &v(aux).scale(2.0);
            (square_reduced(&p), Some(aux.to_string()))
        }
    }
}

/// Exhaustive minimum of `p` over the listed binaries; the oracle behind
/// several tests. Panics above 24 variables.
pub fn brute_force_min(p: &Polynomial, vars: &BTreeSet<String>) -> (f64, Vec<u8>) {
    let names: Vec<&String> = vars.iter().collect();
    assert!(names.len() <= 24, "brute force limited to 24 variables");
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << names.len()) {
        let bits: Vec<u8> = (0..names.len()).map(|k| ((mask >> k) & 1) as u8).collect();
        let val = p
            .evaluate_with(|n| names.iter().position(|m| m.as_str() == n).map(|k| f64::from(bits[k])))
            .expect("all variables assigned");
        if val < best.0 {
            best = (val, bits);
        }
    }
    best
}
