//! Three-valued classification of arbitrarily large ranges: is `[lo, hi)`
//! inside the set, disjoint from it, or neither. Exact for every expression
//! whose periodic parts fold, without enumerating the range.

use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};

use crate::form::{lower, Atom, Ctx, Formula};
use crate::runs::run_at;
use crate::{Error, SetExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Span {
    In,
    Out,
    Mixed,
}

impl Span {
    fn join(self, other: Span) -> Span {
        if self == other {
            self
        } else {
            Span::Mixed
        }
    }
}

const CELL_CAP: usize = 1 << 16;

fn to_nat(x: &BigInt) -> Option<BigUint> {
    if x.sign() == Sign::Minus {
        None
    } else {
        Some(x.magnitude().clone())
    }
}

fn atom_member_big(atom: &Atom, n: &BigInt) -> bool {
    let m = n - BigInt::from(atom.shift());
    let Some(m) = to_nat(&m) else { return false };
    if m.is_zero() {
        return false;
    }
    match atom {
        Atom::Block { scheme, index, .. } => match scheme.locate_big(&m) {
            Some(Some(i)) => index.member(i),
            _ => false,
        },
        Atom::Codes { branch, stride, .. } => {
            let s = BigUint::from(*stride);
            if !(&m % &s).is_zero() {
                return false;
            }
            let q = m / s;
            let len = q.bits() - 1;
            len >= 1 && branch.code_big(len) == q
        }
    }
}

fn atom_breaks(atom: &Atom, lo: &BigInt, hi: &BigInt, out: &mut Vec<BigInt>) -> Result<(), Error> {
    let t = BigInt::from(atom.shift());
    match atom {
        Atom::Block { scheme, index, .. } => {
            let first = to_nat(&(lo - &t)).filter(|x| !x.is_zero()).unwrap_or_else(BigUint::one);
            let Some(last) = to_nat(&(hi - &t - 1)) else { return Ok(()) };
            if last < first {
                return Ok(());
            }
            let m_lo = match scheme.locate_big(&first) {
                Some(Some(m)) => m,
                Some(None) => 1,
                None => return Err(Error::Overflow),
            };
            let m_hi = match scheme.locate_big(&last) {
                Some(Some(m)) => m,
                Some(None) => return Ok(()),
                None => return Err(Error::Overflow),
            };
            // Membership only changes where the index run changes.
            let mut m = m_lo;
            out.push(BigInt::from(scheme.boundary(m)) + &t);
            while m <= m_hi {
                match run_at(index, m).1 {
                    Some(next) if next <= m_hi => {
                        out.push(BigInt::from(scheme.boundary(next)) + &t);
                        m = next;
                    }
                    _ => break,
                }
                if out.len() > CELL_CAP {
                    return Err(Error::Budget {
                        limit: CELL_CAP as u64,
                    });
                }
            }
        }
        Atom::Codes { branch, stride, .. } => {
            let top = hi.bits() + 2;
            for len in 1..=top {
                let p = BigInt::from(branch.code_big(len) * *stride) + &t;
                if &p >= hi {
                    break;
                }
                out.push(p.clone());
                out.push(p + 1);
            }
        }
    }
    Ok(())
}

pub(crate) fn classify_formula(ctx: &Ctx, f: &Formula, lo: &BigUint, hi: &BigUint) -> Result<Span, Error> {
    if hi <= lo {
        return Ok(Span::In);
    }
    let lo_i = BigInt::from(lo.clone());
    let hi_i = BigInt::from(hi.clone());
    let ids = f.atoms();
    let mut breaks = Vec::new();
    for &i in &ids {
        atom_breaks(&ctx.atoms[i], &lo_i, &hi_i, &mut breaks)?;
    }
    breaks.retain(|b| *b > lo_i && *b < hi_i);
    breaks.push(lo_i.clone());
    breaks.sort();
    breaks.dedup();
    let mut acc: Option<Span> = None;
    for (c, a) in breaks.iter().enumerate() {
        let b = breaks.get(c + 1).unwrap_or(&hi_i);
        let values: Vec<bool> = ids.iter().map(|&i| atom_member_big(&ctx.atoms[i], a)).collect();
        let g = f.eval(&|i| values[ids.binary_search(&i).unwrap()])?;
        let (au, bu) = (a.magnitude(), b.magnitude());
        let cnt = g.count_range_big(au, bu);
        let len = bu - au;
        let s = if cnt == len {
            Span::In
        } else if cnt.is_zero() {
            Span::Out
        } else {
            Span::Mixed
        };
        acc = Some(acc.map_or(s, |x| x.join(s)));
        if acc == Some(Span::Mixed) {
            break;
        }
    }
    Ok(acc.unwrap_or(Span::In))
}

/// Classifies `[lo, hi)` against `e`; `lo >= 1` is assumed, and an empty
/// range is reported as `In`.
pub fn classify_span(e: &SetExpr, lo: &BigUint, hi: &BigUint) -> Result<Span, Error> {
    let mut ctx = Ctx::default();
    let f = lower(&mut ctx, e, 0)?;
    classify_formula(&ctx, &f, lo, hi)
}

/// Exact membership of an arbitrarily large position.
pub(crate) fn member_big(e: &SetExpr, n: &BigUint) -> Result<bool, Error> {
    if let Some(x) = n.to_u64() {
        return Ok(e.member(x));
    }
    let one = BigUint::one();
    Ok(classify_span(e, n, &(n + &one))? == Span::In)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runs::for_each_run;
    use crate::{Branch, Budget, IntervalScheme};
    use alloc::vec;

    fn brute(e: &SetExpr, lo: u64, hi: u64) -> Span {
        let mut seen = (false, false);
        for_each_run(e, lo, hi - 1, Budget::default(), |_, _, v| {
            if v {
                seen.0 = true
            } else {
                seen.1 = true
            }
        })
        .unwrap();
        match seen {
            (true, false) | (false, false) => Span::In,
            (false, true) => Span::Out,
            _ => Span::Mixed,
        }
    }

    #[test]
    fn agrees_with_enumeration_on_small_ranges() {
        let a_star = SetExpr::blocks(IntervalScheme::dyadic(), SetExpr::ap(2, 2).unwrap());
        let x: Branch = "1|01".parse().unwrap();
        let exprs = [
            a_star.clone(),
            SetExpr::diff(SetExpr::translate(a_star.clone(), 2), a_star.clone()),
            SetExpr::union(SetExpr::ap(1, 2).unwrap(), SetExpr::ap(2, 2).unwrap()),
            SetExpr::blocks(IntervalScheme::Triangular, SetExpr::codes(x.clone(), 2).unwrap()),
            SetExpr::translate(SetExpr::codes(x, 1).unwrap(), 3),
            SetExpr::finite(vec![3, 4, 5]).unwrap(),
        ];
        for e in &exprs {
            for lo in 1..60u64 {
                for len in 1..40u64 {
                    let got = classify_span(e, &BigUint::from(lo), &BigUint::from(lo + len)).unwrap();
                    assert_eq!(got, brute(e, lo, lo + len), "{e} on [{lo}, {})", lo + len);
                }
            }
        }
    }

    #[test]
    fn huge_blocks() {
        let s = IntervalScheme::dyadic();
        let a_star = SetExpr::blocks(s, SetExpr::ap(2, 2).unwrap());
        let (lo, hi) = s.interval_of(200).unwrap();
        assert_eq!(classify_span(&a_star, &lo, &hi).unwrap(), Span::In);
        let (lo, hi) = s.interval_of(201).unwrap();
        assert_eq!(classify_span(&a_star, &lo, &hi).unwrap(), Span::Out);
        let odd = SetExpr::ap(1, 2).unwrap();
        assert_eq!(classify_span(&odd, &lo, &hi).unwrap(), Span::Mixed);
        assert!(member_big(&a_star, &lo).unwrap() == false);
    }
}
