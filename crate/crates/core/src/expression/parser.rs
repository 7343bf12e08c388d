//! Recursive-descent parser for polynomial expressions and comparisons.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! comparison := expr cmp expr
//! cmp        := "=" | "==" | ">=" | ">" | "<=" | "<"
//! expr       := term (("+" | "-") term)*
//! term       := unary ("*" unary)*
//! unary      := ("+" | "-") unary | power
//! power      := atom (("**" | "^") integer)?
//! atom       := number | identifier | "(" expr ")"
//! ```
//!
//! Division, function calls and implicit multiplication are rejected.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use super::comparison::{CmpOp, Comparison};
use super::polynomial::Polynomial;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("exponent at position {position} must be a non-negative integer")]
    InvalidExponent { position: usize },
    #[error("operator `{op}` at position {position} is not supported; only +, -, * and integer powers are allowed")]
    UnsupportedOperator { op: String, position: usize },
    #[error("non-polynomial function `{name}` at position {position}")]
    UnsupportedFunction { name: String, position: usize },
    #[error("unexpected {found} at position {position}, expected {expected}")]
    Unexpected {
        found: String,
        expected: &'static str,
        position: usize,
    },
    #[error("unexpected end of input, expected {expected}")]
    UnexpectedEnd { expected: &'static str },
    #[error("expected exactly one comparison operator, found {found}")]
    Comparator { found: usize },
}

/// Set of identifiers an expression may reference.
pub trait VarScope {
    fn contains_var(&self, name: &str) -> bool;
}

impl VarScope for BTreeSet<String> {
    fn contains_var(&self, name: &str) -> bool {
        self.contains(name)
    }
}

impl VarScope for HashSet<String> {
    fn contains_var(&self, name: &str) -> bool {
        self.contains(name)
    }
}

impl VarScope for [&str] {
    fn contains_var(&self, name: &str) -> bool {
        self.contains(&name)
    }
}

impl<const N: usize> VarScope for [&str; N] {
    fn contains_var(&self, name: &str) -> bool {
        self.contains(&name)
    }
}

/// Accepts every identifier.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnyVar;

impl VarScope for AnyVar {
    fn contains_var(&self, _: &str) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Pow,
    LParen,
    RParen,
    Cmp(CmpOp),
    Other(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(_, s) => format!("number `{s}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Pow => "`**`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Cmp(op) => format!("`{op}`"),
            Tok::Other(s) => format!("`{s}`"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let peek = |k: usize| chars.get(k).map(|(_, c)| *c);
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && peek(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while peek(i).is_some_and(|d| d.is_ascii_digit() || d == '.') {
                i += 1;
            }
            // exponent part, only when followed by a digit
            if matches!(peek(i), Some('e') | Some('E')) {
                let signed = matches!(peek(i + 1), Some('+') | Some('-'));
                let digit_at = if signed { i + 2 } else { i + 1 };
                if peek(digit_at).is_some_and(|d| d.is_ascii_digit()) {
                    i = digit_at;
                    while peek(i).is_some_and(|d| d.is_ascii_digit()) {
                        i += 1;
                    }
                }
            }
            let end = chars.get(i).map(|(p, _)| *p).unwrap_or(text.len());
            let lit = &text[pos..end];
            let value: f64 = lit.parse().map_err(|_| ParseError::Unexpected {
                found: format!("malformed number `{lit}`"),
                expected: "a decimal literal",
                position: pos,
            })?;
            if peek(i).is_some_and(|d| d.is_alphabetic() || d == '_') {
                return Err(ParseError::Unexpected {
                    found: format!("identifier directly after number `{lit}`"),
                    expected: "an explicit `*`",
                    position: chars[i].0,
                });
            }
            let _ = start;
            out.push((Tok::Num(value, lit.to_string()), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = pos;
            while peek(i).is_some_and(|d| d.is_alphanumeric() || d == '_' || d == '#') {
                i += 1;
            }
            let end = chars.get(i).map(|(p, _)| *p).unwrap_or(text.len());
            out.push((Tok::Ident(text[start..end].to_string()), start));
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().map(|(_, c)| *c).collect();
        let (tok, width) = match two.as_str() {
            "**" => (Tok::Pow, 2),
            ">=" => (Tok::Cmp(CmpOp::Ge), 2),
            "<=" => (Tok::Cmp(CmpOp::Le), 2),
            "==" => (Tok::Cmp(CmpOp::Eq), 2),
            "!=" => (Tok::Other("!=".into()), 2),
            _ => match c {
                '+' => (Tok::Plus, 1),
                '-' => (Tok::Minus, 1),
                '*' => (Tok::Star, 1),
                '^' => (Tok::Pow, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '=' => (Tok::Cmp(CmpOp::Eq), 1),
                '>' => (Tok::Cmp(CmpOp::Gt), 1),
                '<' => (Tok::Cmp(CmpOp::Lt), 1),
                other => (Tok::Other(other.to_string()), 1),
            },
        };
        out.push((tok, pos));
        i += width;
    }
    Ok(out)
}

struct Parser<'a, S: VarScope + ?Sized> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    scope: &'a S,
}

impl<S: VarScope + ?Sized> Parser<'_, S> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn position(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(0)
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.toks.get(self.pos) {
            None => ParseError::UnexpectedEnd { expected },
            Some((Tok::Other(op), p)) if op == "/" || op == "!=" || op == "%" => {
                ParseError::UnsupportedOperator { op: op.clone(), position: *p }
            }
            Some((t, p)) => ParseError::Unexpected {
                found: t.describe(),
                expected,
                position: *p,
            },
        }
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Pow) = self.peek() {
            self.pos += 1;
            let position = self.position();
            let exp = match self.toks.get(self.pos) {
                Some((Tok::Num(v, _), _)) => *v,
                Some((Tok::Minus, _)) => return Err(ParseError::InvalidExponent { position }),
                Some((Tok::LParen, _)) | Some((Tok::Ident(_), _)) => {
                    return Err(ParseError::InvalidExponent { position })
                }
                _ => return Err(self.unexpected("an integer exponent")),
            };
            self.pos += 1;
            if exp < 0.0 || exp.fract() != 0.0 || exp > u32::MAX as f64 {
                return Err(ParseError::InvalidExponent { position });
            }
            if let Some(Tok::Pow) = self.peek() {
                return Err(ParseError::Unexpected {
                    found: "chained exponent".into(),
                    expected: "parentheses around the inner power",
                    position: self.position(),
                });
            }
            return Ok(base.pow(exp as u32));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        let Some((tok, position)) = self.toks.get(self.pos).cloned() else {
            return Err(ParseError::UnexpectedEnd { expected: "a number, identifier or `(`" });
        };
        match tok {
            Tok::Num(v, _) => {
                self.pos += 1;
                Ok(Polynomial::constant(v))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if let Some(Tok::LParen) = self.peek() {
                    return Err(ParseError::UnsupportedFunction { name, position });
                }
                if !self.scope.contains_var(&name) {
                    return Err(ParseError::UnknownIdentifier { name, position });
                }
                Ok(Polynomial::var(name))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(self.unexpected("`)`")),
                }
            }
            _ => Err(self.unexpected("a number, identifier or `(`")),
        }
    }
}

fn parse_tokens<S: VarScope + ?Sized>(toks: &[(Tok, usize)], scope: &S) -> Result<Polynomial, ParseError> {
    let mut p = Parser { toks, pos: 0, scope };
    let poly = p.expr()?;
    if p.pos < toks.len() {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(poly)
}

/// Parses `text` into its expanded canonical polynomial.
pub fn parse_expression<S: VarScope + ?Sized>(text: &str, known_vars: &S) -> Result<Polynomial, ParseError> {
    let toks = tokenize(text)?;
    if let Some((Tok::Cmp(_), _)) = toks.iter().find(|(t, _)| matches!(t, Tok::Cmp(_))) {
        return Err(ParseError::Comparator { found: toks.iter().filter(|(t, _)| matches!(t, Tok::Cmp(_))).count() });
    }
    parse_tokens(&toks, known_vars)
}

/// Parses `lhs op rhs`, moving every variable term to the left and the
/// constant to the right.
pub fn parse_constraint<S: VarScope + ?Sized>(text: &str, known_vars: &S) -> Result<Comparison, ParseError> {
    let toks = tokenize(text)?;
    let cmps: Vec<usize> = toks.iter().enumerate().filter(|(_, (t, _))| matches!(t, Tok::Cmp(_))).map(|(i, _)| i).collect();
    if cmps.len() != 1 {
        return Err(ParseError::Comparator { found: cmps.len() });
    }
    let at = cmps[0];
    let Tok::Cmp(op) = toks[at].0 else { unreachable!() };
    let lhs = parse_tokens(&toks[..at], known_vars)?;
    let rhs = parse_tokens(&toks[at + 1..], known_vars)?;
    Ok(Comparison::from_sides(&lhs, op, &rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expression::Monomial;

    const VARS: [&str; 6] = ["a", "b", "c", "w", "x", "obj_0"];

    fn m(v: &[&str]) -> Monomial {
        Monomial::from_vars(v.iter().copied())
    }

    #[test]
    fn cost_function_of_the_worked_example() {
        let p = parse_expression("a + b*c + c**2", &VARS).unwrap();
        let expected = Polynomial::from_terms([(m(&["a"]), 1.0), (m(&["b", "c"]), 1.0), (m(&["c", "c"]), 1.0)]);
        assert_eq!(p, expected);
        assert_eq!(parse_expression("a + b*c + c^2", &VARS).unwrap(), expected);
    }

    #[test]
    fn zero_and_difference_of_squares() {
        assert!(parse_expression("0", &VARS).unwrap().is_zero());
        let p = parse_expression("(b+c)*(b-c)", &VARS).unwrap();
        assert_eq!(p, Polynomial::from_terms([(m(&["b", "b"]), 1.0), (m(&["c", "c"]), -1.0)]));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let p = parse_expression("-x**2", &VARS).unwrap();
        assert_eq!(p, Polynomial::term(m(&["x", "x"]), -1.0));
        let p = parse_expression("2*-x", &VARS).unwrap();
        assert_eq!(p, Polynomial::term(m(&["x"]), -2.0));
    }

    #[test]
    fn constraints_move_variables_left() {
        let c = parse_constraint("b + c >= 2", &VARS).unwrap();
        assert_eq!(c.op, CmpOp::Ge);
        assert_eq!(c.rhs, 2.0);
        assert_eq!(c.lhs, parse_expression("b + c", &VARS).unwrap());

        let c = parse_constraint("x = x", &VARS).unwrap();
        assert!(c.lhs.is_zero());
        assert_eq!((c.op, c.rhs), (CmpOp::Eq, 0.0));

        let c = parse_constraint("2*w + 3 <= 5 - w", &VARS).unwrap();
        assert_eq!(c.lhs, Polynomial::term(m(&["w"]), 3.0));
        assert_eq!((c.op, c.rhs), (CmpOp::Le, 2.0));
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse_expression("a + zz", &VARS),
            Err(ParseError::UnknownIdentifier { name: "zz".into(), position: 4 })
        );
        assert_eq!(parse_expression("a**1.5", &VARS), Err(ParseError::InvalidExponent { position: 3 }));
        assert_eq!(parse_expression("a^-1", &VARS), Err(ParseError::InvalidExponent { position: 2 }));
        assert!(matches!(parse_expression("a / b", &VARS), Err(ParseError::UnsupportedOperator { position: 2, .. })));
        assert!(matches!(parse_expression("exp(a)", &VARS), Err(ParseError::UnsupportedFunction { .. })));
        assert!(matches!(parse_expression("2w", &VARS), Err(ParseError::Unexpected { position: 1, .. })));
        assert!(matches!(parse_expression("(a + b", &VARS), Err(ParseError::UnexpectedEnd { .. })));
        assert!(matches!(parse_expression("a b", &VARS), Err(ParseError::Unexpected { position: 2, .. })));
        assert_eq!(parse_constraint("a + b", &VARS), Err(ParseError::Comparator { found: 0 }));
        assert_eq!(parse_constraint("a <= b <= c", &VARS), Err(ParseError::Comparator { found: 2 }));
        assert_eq!(parse_expression("a >= 1", &VARS), Err(ParseError::Comparator { found: 1 }));
    }

    #[test]
    fn array_style_identifiers_and_scientific_literals() {
        let p = parse_expression("2.5e-1*obj_0 + 1E2", &VARS).unwrap();
        assert_eq!(p, Polynomial::from_terms([(m(&["obj_0"]), 0.25), (Monomial::one(), 100.0)]));
    }
}
