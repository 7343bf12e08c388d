use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use super::format::format_sig;

/// Coefficients with a magnitude below this are dropped after every operation.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// A product of variables, stored as a sorted multiset of identifiers.
///
/// Repeated identifiers encode exponents: `c^2` is `["c", "c"]`. The empty
/// monomial is the constant term.
///
/// Monomials order by degree (highest first) and then lexicographically, so
/// iterating a [`Polynomial`] yields its canonical print order with the
/// constant last.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<String>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Monomial(vec![name.into()])
    }

    pub fn from_vars<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v: Vec<String> = vars.into_iter().map(Into::into).collect();
        v.sort();
        Monomial(v)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    /// Identifiers with multiplicity, sorted.
    pub fn vars(&self) -> &[String] {
        &self.0
    }

    /// Distinct identifiers paired with their exponent.
    pub fn powers(&self) -> Vec<(&str, usize)> {
        let mut out: Vec<(&str, usize)> = Vec::new();
        for v in &self.0 {
            match out.last_mut() {
                Some((last, k)) if *last == v.as_str() => *k += 1,
                _ => out.push((v.as_str(), 1)),
            }
        }
        out
    }

    pub fn multiplicity(&self, var: &str) -> usize {
        self.0.iter().filter(|v| v.as_str() == var).count()
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.binary_search_by(|v| v.as_str().cmp(var)).is_ok()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            if self.0[i] <= other.0[j] {
                out.push(self.0[i].clone());
                i += 1;
            } else {
                out.push(other.0[j].clone());
                j += 1;
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// The monomial with every exponent of a variable accepted by `is_binary`
    /// collapsed to one.
    pub fn reduce_idempotent(&self, is_binary: impl Fn(&str) -> bool) -> Monomial {
        let mut out: Vec<String> = Vec::with_capacity(self.0.len());
        for v in &self.0 {
            if is_binary(v) && out.last() == Some(v) {
                continue;
            }
            out.push(v.clone());
        }
        Monomial(out)
    }

    /// Removes every occurrence of `var`, returning the remainder and the
    /// removed exponent.
    pub fn without(&self, var: &str) -> (Monomial, usize) {
        let rest: Vec<String> = self.0.iter().filter(|v| v.as_str() != var).cloned().collect();
        let k = self.0.len() - rest.len();
        (Monomial(rest), k)
    }

    fn write_product(&self, f: &mut impl fmt::Write) -> fmt::Result {
        for (i, (v, k)) in self.powers().into_iter().enumerate() {
            if i > 0 {
                f.write_char('*')?;
            }
            f.write_str(v)?;
            if k > 1 {
                write!(f, "^{k}")?;
            }
        }
        Ok(())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.len().cmp(&self.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        self.write_product(f)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("variable `{0}` has no assigned value")]
pub struct MissingVariable(pub String);

/// Sparse real polynomial over named variables.
///
/// Every operation returns a value in canonical form: like terms merged and
/// coefficients with magnitude below [`ZERO_TOLERANCE`] removed. The constant
/// term lives at the empty monomial.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(name: impl Into<String>) -> Self {
        Self::term(Monomial::var(name), 1.0)
    }

    pub fn term(m: Monomial, coeff: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(m, coeff);
        p
    }

    /// Affine form `offset + Σ weight·var`.
    pub fn affine<'a, I>(weights: I, offset: f64) -> Self
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut p = Self::constant(offset);
        for (v, w) in weights {
            p.add_term(Monomial::var(v), w);
        }
        p
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `coeff` to the coefficient of `m`, dropping it if it cancels.
    pub fn add_term(&mut self, m: Monomial, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let c = *o.get() + coeff;
                if c.abs() < ZERO_TOLERANCE {
                    o.remove();
                } else {
                    *o.get_mut() = c;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                if coeff.abs() >= ZERO_TOLERANCE {
                    v.insert(coeff);
                }
            }
        }
    }

    /// Terms in canonical order (degree descending, then lexicographic).
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Same as [`Polynomial::is_zero`].
    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&Monomial::one())
    }

    /// Everything except the constant term.
    pub fn without_constant(&self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().filter(|(m, _)| !m.is_constant()).map(|(m, c)| (m.clone(), *c)).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.terms.keys().flat_map(|m| m.vars().iter().map(String::as_str)).collect()
    }

    pub fn scale(&self, k: f64) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), c * k)))
    }

    pub fn pow(&self, exp: u32) -> Polynomial {
        let mut result = Polynomial::constant(1.0);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Applies `x^k = x` for every variable accepted by `is_binary`.
    pub fn reduce_idempotent(&self, is_binary: impl Fn(&str) -> bool) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().map(|(m, c)| (m.reduce_idempotent(&is_binary), *c)))
    }

    /// [`reduce_idempotent`](Self::reduce_idempotent) over an explicit set.
    pub fn reduce_binary_idempotence(&self, binary_vars: &BTreeSet<String>) -> Polynomial {
        self.reduce_idempotent(|v| binary_vars.contains(v))
    }

    /// Replaces every occurrence of `var` by `replacement`.
    pub fn substitute(&self, var: &str, replacement: &Polynomial) -> Polynomial {
        let mut powers: Vec<Polynomial> = vec![Polynomial::constant(1.0)];
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let (rest, k) = m.without(var);
            if k == 0 {
                out.add_term(m.clone(), *c);
                continue;
            }
            while powers.len() <= k {
                let next = powers.last().unwrap() * replacement;
                powers.push(next);
            }
            for (rm, rc) in powers[k].terms() {
                out.add_term(rest.mul(rm), c * rc);
            }
        }
        out
    }

    /// Substitutes several variables at once. Replacements must not mention
    /// the variables being replaced.
    pub fn substitute_all(&self, map: &HashMap<String, Polynomial>) -> Polynomial {
        let mut out = self.clone();
        for v in self.variables() {
            if let Some(r) = map.get(v) {
                out = out.substitute(v, r);
            }
        }
        out
    }

    pub fn evaluate(&self, assignment: &HashMap<String, f64>) -> Result<f64, MissingVariable> {
        self.evaluate_with(|v| assignment.get(v).copied())
    }

    pub fn evaluate_with(&self, lookup: impl Fn(&str) -> Option<f64>) -> Result<f64, MissingVariable> {
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut t = *c;
            for v in m.vars() {
                match lookup(v) {
                    Some(x) => t *= x,
                    None => {
                        // report the alphabetically first missing name
                        let first = self.variables().into_iter().find(|v| lookup(v).is_none()).unwrap_or(v);
                        return Err(MissingVariable(first.to_string()));
                    }
                }
            }
            total += t;
        }
        Ok(total)
    }

    /// Exact text form: coefficients printed with the shortest round-tripping
    /// representation. Parsing the result reproduces `self` bit for bit.
    pub fn to_exact_string(&self) -> String {
        let mut s = String::new();
        self.write_with(&mut s, |c| format!("{c}")).unwrap();
        s
    }

    fn write_with(&self, f: &mut impl fmt::Write, coeff: impl Fn(f64) -> String) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_char('0');
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = *c < 0.0;
            match (i, neg) {
                (0, true) => f.write_char('-')?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mag = c.abs();
            let text = coeff(mag);
            if m.is_constant() {
                f.write_str(&text)?;
            } else {
                if text != "1" {
                    f.write_str(&text)?;
                    f.write_char('*')?;
                }
                m.write_product(f)?;
            }
        }
        Ok(())
    }
}

/// Canonical text form with coefficients rounded to 12 significant digits.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_with(f, |c| format_sig(c, 12))
    }
}

impl From<f64> for Polynomial {
    fn from(c: f64) -> Self {
        Polynomial::constant(c)
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -*c);
        }
        out
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&self).$f(&rhs)
            }
        }
        impl<'a> $tr<&'a Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: &Polynomial) -> Polynomial {
                (&self).$f(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl serde::Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_exact_string())
    }
}

impl<'de> serde::Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = <String as serde::Deserialize>::deserialize(d)?;
        super::parse_expression(&text, &super::AnyVar).map_err(serde::de::Error::custom)
    }
}
