//! Binary encodings of declared variables.
//!
//! Every variable becomes an affine form `offset + Σ weight_k · b_k` over
//! fresh binaries named `source#k`, possibly with constraints the binaries
//! must satisfy (one-hot for dictionaries, ordering for domain walls).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expression::{round_sig, CmpOp, Comparison, Polynomial};
use crate::problem::{ContinuousEncoding, VariableDecl, VariableKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("precision {precision} exceeds the range {range} of `{name}`")]
    PrecisionExceedsRange { name: String, precision: f64, range: f64 },
    #[error("coefficient bound {bound} of `{name}` is below its precision {precision}")]
    BoundBelowPrecision { name: String, bound: f64, precision: f64 },
    #[error("logarithmic base {0} must be at least 2")]
    BaseTooSmall(f64),
    #[error("invalid domain for `{0}`")]
    InvalidDomain(String),
    #[error("binary `{0}` has no assigned value")]
    MissingBit(String),
}

/// How a single source variable maps onto binaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingPlan {
    pub source: String,
    /// Binary identifiers with their weights, in encoding order.
    pub binaries: Vec<(String, f64)>,
    pub offset: f64,
    /// Constraints over the binaries that every valid pattern satisfies.
    pub induced: Vec<Comparison>,
}

/// Value decoded from a bit pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub value: f64,
    /// False when the pattern violates an induced constraint (e.g. two
    /// active one-hot bits). The weighted sum is still reported.
    pub valid: bool,
}

impl EncodingPlan {
    fn with_weights(source: &str, weights: &[f64], offset: f64) -> Self {
        EncodingPlan {
            source: source.to_string(),
            binaries: weights.iter().enumerate().map(|(k, w)| (format!("{source}#{k}"), *w)).collect(),
            offset,
            induced: Vec::new(),
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.binaries.iter().map(|(_, w)| *w).collect()
    }

    pub fn binary_names(&self) -> impl Iterator<Item = &str> {
        self.binaries.iter().map(|(n, _)| n.as_str())
    }

    /// `offset + Σ weight·binary`.
    pub fn affine(&self) -> Polynomial {
        Polynomial::affine(self.binaries.iter().map(|(n, w)| (n.as_str(), *w)), self.offset)
    }

    pub fn decode(&self, bits: impl Fn(&str) -> Option<u8>) -> Result<Decoded, EncodingError> {
        let mut value = self.offset;
        let mut local = HashMap::with_capacity(self.binaries.len());
        for (name, w) in &self.binaries {
            let b = bits(name).ok_or_else(|| EncodingError::MissingBit(name.clone()))?;
            value += w * f64::from(b);
            local.insert(name.clone(), f64::from(b));
        }
        let valid = self.induced.iter().all(|c| {
            let v = c.lhs.evaluate(&local).unwrap_or(f64::NAN);
            c.residual(v, 0.0) <= 1e-9
        });
        Ok(Decoded { value, valid })
    }

    /// Smallest and largest value reachable by any bit pattern.
    pub fn bounds(&self) -> (f64, f64) {
        let lo = self.offset + self.binaries.iter().map(|(_, w)| w.min(0.0)).sum::<f64>();
        let hi = self.offset + self.binaries.iter().map(|(_, w)| w.max(0.0)).sum::<f64>();
        (lo, hi)
    }
}

/// Tolerance used when comparing partial weight sums against a range.
fn slack(range: f64) -> f64 {
    1e-9 * range.abs().max(1.0)
}

fn tidy(w: f64) -> f64 {
    round_sig(w, 12)
}

fn push_residual(weights: &mut Vec<f64>, range: f64) {
    let sum: f64 = weights.iter().sum();
    let residual = tidy(range - sum);
    if residual > slack(range) {
        weights.push(residual);
    }
}

/// Powers of `base` times `precision` while the partial sum fits, then a
/// residual so the weights sum to `range`. Only base 2 reaches every grid
/// point; larger bases skip values (base 3 at step 1 cannot express 2).
pub fn logarithmic_weights(range: f64, precision: f64, base: f64) -> Vec<f64> {
    let mut weights = Vec::new();
    let mut sum = 0.0;
    let mut w = precision;
    while sum + w <= range + slack(range) {
        weights.push(tidy(w));
        sum += w;
        w *= base;
    }
    push_residual(&mut weights, range);
    weights
}

pub fn unitary_weights(range: f64, precision: f64) -> Vec<f64> {
    let n = ((range / precision) - 1e-9).ceil().max(1.0) as usize;
    let mut weights = vec![tidy(precision); n - 1];
    push_residual(&mut weights, range);
    weights
}

pub fn arithmetic_weights(range: f64, precision: f64) -> Vec<f64> {
    let mut weights = Vec::new();
    let mut sum = 0.0;
    let mut k = 1.0;
    while sum + k * precision <= range + slack(range) {
        weights.push(tidy(k * precision));
        sum += k * precision;
        k += 1.0;
    }
    push_residual(&mut weights, range);
    weights
}

pub fn bounded_coefficient_weights(range: f64, precision: f64, bound: f64) -> Vec<f64> {
    let mut weights = Vec::new();
    let mut sum = 0.0;
    let mut w = precision;
    while w <= bound + slack(bound) && sum + w <= range + slack(range) {
        weights.push(tidy(w));
        sum += w;
        w *= 2.0;
    }
    while sum + bound <= range + slack(range) {
        weights.push(tidy(bound));
        sum += bound;
    }
    push_residual(&mut weights, range);
    weights
}

/// Grid `lo, lo + p, …` with `hi` always included.
pub fn dictionary_levels(lo: f64, hi: f64, precision: f64) -> Vec<f64> {
    let range = hi - lo;
    let steps = (range / precision + 1e-9).floor() as usize;
    let mut levels: Vec<f64> = (0..=steps).map(|k| tidy(lo + k as f64 * precision)).collect();
    if *levels.last().unwrap() < hi - slack(range) {
        levels.push(hi);
    }
    levels
}

fn one_hot(plan: &EncodingPlan) -> Comparison {
    Comparison {
        lhs: Polynomial::affine(plan.binary_names().map(|n| (n, 1.0)), 0.0),
        op: CmpOp::Eq,
        rhs: 1.0,
    }
}

fn dictionary(source: &str, levels: &[f64]) -> EncodingPlan {
    let mut plan = EncodingPlan::with_weights(source, levels, 0.0);
    plan.induced.push(one_hot(&plan));
    plan
}

/// Encodes a declared variable.
pub fn encode(decl: &VariableDecl) -> Result<EncodingPlan, EncodingError> {
    let name = decl.name.as_str();
    match &decl.kind {
        VariableKind::BinaryUnipolar => Ok(EncodingPlan::with_weights(name, &[1.0], 0.0)),
        VariableKind::BinaryBipolar => Ok(EncodingPlan::with_weights(name, &[2.0], -1.0)),
        VariableKind::Discrete { levels } => {
            if levels.is_empty() {
                return Err(EncodingError::InvalidDomain(name.into()));
            }
            Ok(dictionary(name, levels))
        }
        VariableKind::Continuous { lo, hi, precision, encoding } => {
            encode_continuous(name, *lo, *hi, *precision, encoding)
        }
    }
}

pub fn encode_continuous(
    name: &str,
    lo: f64,
    hi: f64,
    precision: f64,
    method: &ContinuousEncoding,
) -> Result<EncodingPlan, EncodingError> {
    let range = hi - lo;
    if !(range > 0.0 && precision > 0.0) {
        return Err(EncodingError::InvalidDomain(name.into()));
    }
    if precision > range + slack(range) {
        return Err(EncodingError::PrecisionExceedsRange { name: name.into(), precision, range });
    }
    let plan = match method {
        ContinuousEncoding::Dictionary => dictionary(name, &dictionary_levels(lo, hi, precision)),
        ContinuousEncoding::Logarithmic { base } => {
            if *base < 2.0 {
                return Err(EncodingError::BaseTooSmall(*base));
            }
            EncodingPlan::with_weights(name, &logarithmic_weights(range, precision, *base), lo)
        }
        ContinuousEncoding::Unitary => EncodingPlan::with_weights(name, &unitary_weights(range, precision), lo),
        ContinuousEncoding::ArithmeticProgression => {
            EncodingPlan::with_weights(name, &arithmetic_weights(range, precision), lo)
        }
        ContinuousEncoding::DomainWall => {
            // Bits fill from the highest index down, so a residual weight sits
            // at index 0 and is only reached at the top of the range.
            let mut weights = unitary_weights(range, precision);
            weights.rotate_right(1);
            let mut plan = EncodingPlan::with_weights(name, &weights, lo);
            let names: Vec<String> = plan.binary_names().map(str::to_string).collect();
            for pair in names.windows(2) {
                plan.induced.push(Comparison {
                    lhs: Polynomial::affine([(pair[1].as_str(), 1.0), (pair[0].as_str(), -1.0)], 0.0),
                    op: CmpOp::Ge,
                    rhs: 0.0,
                });
            }
            plan
        }
        ContinuousEncoding::BoundedCoefficient { bound } => {
            if *bound < precision {
                return Err(EncodingError::BoundBelowPrecision { name: name.into(), bound: *bound, precision });
            }
            EncodingPlan::with_weights(name, &bounded_coefficient_weights(range, precision, *bound), lo)
        }
    };
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cont(method: ContinuousEncoding, precision: f64) -> EncodingPlan {
        encode_continuous("c", -2.0, 2.0, precision, &method).unwrap()
    }

    fn bits_of(plan: &EncodingPlan, mask: u32) -> impl Fn(&str) -> Option<u8> + '_ {
        move |n: &str| plan.binaries.iter().position(|(b, _)| b == n).map(|k| ((mask >> k) & 1) as u8)
    }

    #[test]
    fn binary_kinds() {
        let a = encode(&VariableDecl { name: "a".into(), kind: VariableKind::BinaryUnipolar }).unwrap();
        assert_eq!(a.binaries, vec![("a#0".to_string(), 1.0)]);
        assert_eq!(a.offset, 0.0);
        let s = encode(&VariableDecl { name: "s".into(), kind: VariableKind::BinaryBipolar }).unwrap();
        assert_eq!(s.binaries, vec![("s#0".to_string(), 2.0)]);
        assert_eq!(s.offset, -1.0);
    }

    #[test]
    fn discrete_dictionary_with_one_hot() {
        let b = encode(&VariableDecl { name: "b".into(), kind: VariableKind::Discrete { levels: vec![-1.0, 1.0, 3.0] } }).unwrap();
        assert_eq!(b.weights(), vec![-1.0, 1.0, 3.0]);
        assert_eq!(b.offset, 0.0);
        assert_eq!(b.induced.len(), 1);
        assert_eq!(b.induced[0].to_string(), "b#0 + b#1 + b#2 = 1");
        // exactly one valid pattern per level
        let valid: Vec<f64> = (0..8).map(|m| b.decode(bits_of(&b, m)).unwrap()).filter(|d| d.valid).map(|d| d.value).collect();
        assert_eq!(valid, vec![-1.0, 1.0, 3.0]);
        let bad = b.decode(bits_of(&b, 0b011)).unwrap();
        assert_eq!(bad, Decoded { value: 0.0, valid: false });
    }

    #[test]
    fn continuous_weights_of_the_worked_example() {
        let dict = cont(ContinuousEncoding::Dictionary, 0.5);
        assert_eq!(dict.weights(), vec![-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(dict.offset, 0.0);
        let log = cont(ContinuousEncoding::Logarithmic { base: 2.0 }, 0.25);
        assert_eq!(log.weights(), vec![0.25, 0.5, 1.0, 2.0, 0.25]);
        assert_eq!(log.offset, -2.0);
        let unit = cont(ContinuousEncoding::Unitary, 0.5);
        assert_eq!(unit.weights(), vec![0.5; 8]);
        assert_eq!(unit.offset, -2.0);
        let arith = cont(ContinuousEncoding::ArithmeticProgression, 0.2);
        assert_eq!(arith.weights(), vec![0.2, 0.4, 0.6, 0.8, 1.0, 1.0]);
        assert_eq!(arith.offset, -2.0);
    }

    #[test]
    fn domain_wall_positions() {
        let dw = cont(ContinuousEncoding::DomainWall, 0.5);
        assert_eq!(dw.weights(), vec![0.5; 8]);
        assert_eq!(dw.induced.len(), 7);
        let mut valid: Vec<f64> = (0..256u32).map(|m| dw.decode(bits_of(&dw, m)).unwrap()).filter(|d| d.valid).map(|d| d.value).collect();
        valid.sort_by(f64::total_cmp);
        let grid: Vec<f64> = (0..=8).map(|k| -2.0 + 0.5 * k as f64).collect();
        assert_eq!(valid, grid);
    }

    #[test]
    fn domain_wall_residual_reached_last() {
        let dw = encode_continuous("d", 0.0, 1.0, 0.4, &ContinuousEncoding::DomainWall).unwrap();
        assert_eq!(dw.weights(), vec![0.2, 0.4, 0.4]);
        let mut valid: Vec<f64> = (0..8u32).map(|m| dw.decode(bits_of(&dw, m)).unwrap()).filter(|d| d.valid).map(|d| d.value).collect();
        valid.sort_by(f64::total_cmp);
        assert_eq!(valid, vec![0.0, 0.4, 0.8, 1.0]);
    }

    #[test]
    fn bounded_coefficient_reaches_hi() {
        let b = cont(ContinuousEncoding::BoundedCoefficient { bound: 1.0 }, 0.5);
        assert_eq!(b.weights(), vec![0.5, 1.0, 1.0, 1.0, 0.5]);
        assert_eq!(b.bounds(), (-2.0, 2.0));
    }

    #[test]
    fn slack_range_of_the_worked_example() {
        let s = encode_continuous("s", -3.0, 0.0, 0.25, &ContinuousEncoding::default()).unwrap();
        assert_eq!(s.weights(), vec![0.25, 0.5, 1.0, 1.25]);
        assert_eq!(s.offset, -3.0);
    }

    #[test]
    fn decode_examples() {
        let log = cont(ContinuousEncoding::default(), 0.25);
        let zero = |_: &str| Some(0u8);
        assert_eq!(log.decode(zero).unwrap().value, -2.0);
        // b6 alone: -2 + 1
        assert_eq!(log.decode(bits_of(&log, 0b00100)).unwrap().value, -1.0);
        let unit = cont(ContinuousEncoding::Unitary, 0.5);
        assert_eq!(unit.decode(bits_of(&unit, 0b111)).unwrap().value, -0.5);
        assert_eq!(unit.decode(|_: &str| None), Err(EncodingError::MissingBit("c#0".into())));
    }

    #[test]
    fn encoding_errors() {
        assert!(matches!(
            encode_continuous("c", 0.0, 1.0, 2.0, &ContinuousEncoding::Unitary),
            Err(EncodingError::PrecisionExceedsRange { .. })
        ));
        assert!(matches!(
            encode_continuous("c", 0.0, 4.0, 0.5, &ContinuousEncoding::BoundedCoefficient { bound: 0.25 }),
            Err(EncodingError::BoundBelowPrecision { .. })
        ));
        assert!(matches!(
            encode_continuous("c", 0.0, 4.0, 0.5, &ContinuousEncoding::Logarithmic { base: 1.5 }),
            Err(EncodingError::BaseTooSmall(_))
        ));
    }

    #[test]
    fn asymmetric_range_uses_lo_as_offset() {
        let p = encode_continuous("x", 1.5, 4.0, 0.5, &ContinuousEncoding::default()).unwrap();
        assert_eq!(p.offset, 1.5);
        assert_eq!(p.bounds(), (1.5, 4.0));
    }
}
