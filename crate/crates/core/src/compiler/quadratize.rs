//! Degree reduction by pair substitution with a Rosenberg penalty.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::expression::{Monomial, Polynomial};

/// One substitution `aux = left * right`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxRecord {
    pub pair: (String, String),
    pub aux: String,
    pub penalty_scale: f64,
}

/// `M` large enough that any inconsistent auxiliary costs more than the
/// reduced terms can gain: one plus the coefficient mass above degree two.
pub fn default_penalty_scale(p: &Polynomial) -> f64 {
    1.0 + p.terms().filter(|(m, _)| m.degree() > 2).map(|(_, c)| c.abs()).sum::<f64>()
}

fn most_frequent_pair(p: &Polynomial) -> Option<(String, String)> {
    let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for (m, _) in p.terms().filter(|(m, _)| m.degree() > 2) {
        let vars = m.vars();
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                if vars[i] != vars[j] {
                    *counts.entry((vars[i].as_str(), vars[j].as_str())).or_default() += 1;
                }
            }
        }
    }
    // BTreeMap iterates in lexicographic order, so the first maximum wins ties
    let mut best: Option<((&str, &str), usize)> = None;
    for (pair, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((pair, n));
        }
    }
    best.map(|((a, b), _)| (a.to_string(), b.to_string()))
}

/// Reduces a multilinear polynomial to degree two. Auxiliaries are named
/// `{prefix}#k`. When `penalty_scale` is `None` the value from
/// [`default_penalty_scale`] is used.
pub fn quadratize(p: &Polynomial, penalty_scale: Option<f64>, prefix: &str) -> (Polynomial, Vec<AuxRecord>) {
    let scale = penalty_scale.unwrap_or_else(|| default_penalty_scale(p));
    let mut current = p.clone();
    let mut records: Vec<AuxRecord> = Vec::new();
    while let Some((a, b)) = most_frequent_pair(&current) {
        let aux = format!("{prefix}#{}", records.len());
        let mut next = Polynomial::zero();
        for (m, c) in current.terms() {
            if m.degree() > 2 && m.contains(&a) && m.contains(&b) {
                let (rest, _) = m.without(&a);
                let (rest, _) = rest.without(&b);
                next.add_term(rest.mul(&Monomial::var(aux.clone())), c);
            } else {
                next.add_term(m.clone(), c);
            }
        }
        // M * (a*b - 2*a*y - 2*b*y + 3*y)
        next.add_term(Monomial::from_vars([a.as_str(), b.as_str()]), scale);
        next.add_term(Monomial::from_vars([a.as_str(), aux.as_str()]), -2.0 * scale);
        next.add_term(Monomial::from_vars([b.as_str(), aux.as_str()]), -2.0 * scale);
        next.add_term(Monomial::var(aux.clone()), 3.0 * scale);
        records.push(AuxRecord { pair: (a, b), aux, penalty_scale: scale });
        current = next;
    }
    (current, records)
}
