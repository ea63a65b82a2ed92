//! Plain-text inputs: value assignments for family members, and corpora.
//!
//! Both formats skip blank lines and `#` comments. An assignment line is
//! `BRANCH VALUE`, e.g. `01|1 3/8`; a corpus line is one expression.

use std::collections::BTreeSet;
use std::fmt;

use densitylab_core::{Branch, Rational, SetExpr};
use num_traits::{One, Zero};

use crate::json::parse_rational;
use crate::parse::{parse_expr, ParseError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for FileError {}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub branches: Vec<Branch>,
    pub values: Vec<Rational>,
}

fn is_dyadic(r: &Rational) -> bool {
    let d = r.denom();
    d.bits() > 0 && d.trailing_zeros() == Some(d.bits() - 1)
}

/// Distinct branches with distinct dyadic values in `(0, 1)`.
pub fn parse_assignment(text: &str) -> Result<Assignment, FileError> {
    let mut out = Assignment {
        branches: Vec::new(),
        values: Vec::new(),
    };
    let mut seen_b = BTreeSet::new();
    let mut seen_v = BTreeSet::new();
    for (line, l) in content_lines(text) {
        let err = |m: &str| FileError {
            line,
            message: m.to_string(),
        };
        let mut cols = l.split_whitespace();
        let (Some(b), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(err("expected two columns: branch and value"));
        };
        let b: Branch = b.parse().map_err(|e: densitylab_core::Error| err(&e.to_string()))?;
        let v = parse_rational(v).ok_or_else(|| err("value must be a rational p/q"))?;
        if v <= Rational::zero() || v >= Rational::one() || !is_dyadic(&v) {
            return Err(err("value must be a dyadic rational strictly between 0 and 1"));
        }
        if !seen_b.insert(b.clone()) {
            return Err(err("branch assigned twice"));
        }
        if !seen_v.insert(v.clone()) {
            return Err(err("value assigned twice"));
        }
        out.branches.push(b);
        out.values.push(v);
    }
    Ok(out)
}

pub fn parse_corpus(text: &str) -> Result<Vec<SetExpr>, ParseError> {
    content_lines(text)
        .map(|(line, l)| {
            parse_expr(l).map_err(|mut e| {
                e.line = line;
                e
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments() {
        let a = parse_assignment("# members\n|0 1/2\n0|1   3/8  # second\n\n").unwrap();
        assert_eq!(a.branches, vec!["|0".parse().unwrap(), "0|1".parse().unwrap()]);
        assert_eq!(a.values[1], Rational::new(3.into(), 8.into()));
        let bad = |t: &str| parse_assignment(t).unwrap_err();
        assert_eq!(bad("|0 1/2\n|1 1/3").line, 2);
        assert!(bad("|0 1").message.contains("strictly between"));
        assert!(bad("|0 1/2\n0|0 1/4").message.contains("branch"));
        assert!(bad("|0 1/2\n|1 2/4").message.contains("value"));
        assert!(bad("|0").message.contains("two columns"));
        assert!(bad("2|0 1/2").message.contains("bits"));
    }

    #[test]
    fn corpora() {
        let c = parse_corpus("full\n# skip\n  ap(1,2)\n").unwrap();
        assert_eq!(c.len(), 2);
        let e = parse_corpus("full\n\nap(0,2)").unwrap_err();
        assert_eq!((e.line, e.column), (3, 1));
    }
}
