//! `|e ∩ [1, n]|`.
//!
//! The closed form cuts `[1, n]` into cells on which every non-periodic atom
//! is constant; inside a cell the set is one eventually periodic pattern and
//! is counted arithmetically. The number of cells is the number of index
//! runs of the `Blocks` atoms plus twice the number of code points, which is
//! logarithmic for geometric schemes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::form::{lower, Atom, Ctx, Formula};
use crate::runs::{for_each_run, run_at};
use crate::{Budget, EpSet, Error, SetExpr};

/// Exact `|e ∩ [1, n]|` with the default budget.
pub fn prefix_count(e: &SetExpr, n: u64) -> Result<u64, Error> {
    prefix_count_with(e, n, Budget::default())
}

/// Closed form where available, run enumeration otherwise. Both paths give
/// the same value.
pub fn prefix_count_with(e: &SetExpr, n: u64, budget: Budget) -> Result<u64, Error> {
    match closed_form(e, n, budget) {
        Err(Error::Unsupported(_)) => prefix_count_enumerated(e, n, budget),
        other => other,
    }
}

/// Counting by walking runs of constant membership.
pub fn prefix_count_enumerated(e: &SetExpr, n: u64, budget: Budget) -> Result<u64, Error> {
    let mut total = 0u64;
    for_each_run(e, 1, n, budget, |a, b, v| {
        if v {
            total += b - a + 1;
        }
    })?;
    Ok(total)
}

/// Boundaries in `[1, n]` where `atom` may change value.
fn atom_breaks(atom: &Atom, n: u64, budget: Budget, out: &mut Vec<u64>) -> Result<(), Error> {
    let mut push = |p: i128| {
        if p >= 1 && p <= n as i128 {
            out.push(p as u64);
        }
    };
    match atom {
        Atom::Block { scheme, index, shift } => {
            let top = n as i128 - *shift as i128;
            if top < 1 {
                return Ok(());
            }
            let Some(mmax) = scheme.locate(top.min(u64::MAX as i128) as u64) else {
                return Ok(());
            };
            let mut m = 1u64;
            let mut steps = 0u64;
            while m <= mmax {
                steps += 1;
                if steps > budget.elements {
                    return Err(Error::Budget {
                        limit: budget.elements,
                    });
                }
                let Some(k) = scheme.boundary_u64(m) else { break };
                push(k as i128 + *shift as i128);
                match run_at(index, m).1 {
                    Some(next) => m = next,
                    None => break,
                }
            }
        }
        Atom::Codes { branch, stride, shift } => {
            for len in 1..=62u64 {
                let Some(c) = branch.code(len) else { break };
                let Some(p) = c.checked_mul(*stride) else { break };
                let p = p as i128 + *shift as i128;
                if p > n as i128 {
                    break;
                }
                push(p);
                push(p + 1);
            }
        }
    }
    Ok(())
}

/// The closed form alone; `Unsupported` when the expression does not lower.
pub fn prefix_count_closed(e: &SetExpr, n: u64, budget: Budget) -> Result<u64, Error> {
    closed_form(e, n, budget)
}

fn closed_form(e: &SetExpr, n: u64, budget: Budget) -> Result<u64, Error> {
    let mut ctx = Ctx::default();
    let f = lower(&mut ctx, e, 0)?;
    count_formula(&ctx, &f, 1, n, budget)
}

/// Members of the formula in `[lo, hi]`.
pub(crate) fn count_formula(ctx: &Ctx, f: &Formula, lo: u64, hi: u64, budget: Budget) -> Result<u64, Error> {
    if hi < lo.max(1) {
        return Ok(0);
    }
    let ids = f.atoms();
    if ids.len() > 16 {
        return Err(Error::Unsupported("too many atoms"));
    }
    if ids.is_empty() {
        let s = f.eval(&|_| false)?;
        return Ok(s.count_range(lo, hi.saturating_add(1)));
    }
    let mut breaks = Vec::new();
    for &i in &ids {
        atom_breaks(&ctx.atoms[i], hi, budget, &mut breaks)?;
    }
    breaks.push(lo.max(1));
    breaks.retain(|&b| b >= lo.max(1));
    breaks.sort_unstable();
    breaks.dedup();
    if breaks.len() as u64 > budget.elements {
        return Err(Error::Budget {
            limit: budget.elements,
        });
    }
    let mut memo: BTreeMap<u32, EpSet> = BTreeMap::new();
    let mut total = 0u64;
    for (c, &a) in breaks.iter().enumerate() {
        let b = breaks.get(c + 1).copied().unwrap_or(hi.saturating_add(1));
        let mut key = 0u32;
        for (bit, &i) in ids.iter().enumerate() {
            if ctx.atoms[i].member(a) {
                key |= 1 << bit;
            }
        }
        if !memo.contains_key(&key) {
            let s = f.eval(&|i| {
                let bit = ids.binary_search(&i).unwrap();
                key >> bit & 1 == 1
            })?;
            memo.insert(key, s);
        }
        total += memo[&key].count_range(a, b);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Branch, IntervalScheme};
    use alloc::vec;

    fn a_star() -> SetExpr {
        SetExpr::blocks(IntervalScheme::dyadic(), SetExpr::ap(2, 2).unwrap())
    }

    #[test]
    fn examples() {
        assert_eq!(prefix_count(&SetExpr::ap(2, 2).unwrap(), 10), Ok(5));
        assert_eq!(prefix_count(&a_star(), 8), Ok(4));
        assert_eq!(prefix_count(&a_star(), 32), Ok(20));
    }

    #[test]
    fn closed_form_matches_enumeration() {
        let x: Branch = "01|1".parse().unwrap();
        let exprs = [
            a_star(),
            SetExpr::diff(SetExpr::translate(a_star(), 3), a_star()),
            SetExpr::inter(a_star(), SetExpr::ap(1, 3).unwrap()),
            SetExpr::blocks(IntervalScheme::Triangular, SetExpr::ap(2, 2).unwrap()),
            SetExpr::blocks(IntervalScheme::polynomial(3).unwrap(), SetExpr::codes(x.clone(), 2).unwrap()),
            SetExpr::union(SetExpr::codes(x, 1).unwrap(), SetExpr::finite(vec![4, 5, 6]).unwrap()),
            SetExpr::translate(SetExpr::complement(a_star()), -7),
            SetExpr::blocks(IntervalScheme::linear(4).unwrap(), SetExpr::ap(1, 3).unwrap()),
        ];
        for e in &exprs {
            for n in [1u64, 2, 7, 100, 1000, 4097, 10_000] {
                let cf = closed_form(e, n, Budget::default()).unwrap();
                let en = prefix_count_enumerated(e, n, Budget::default()).unwrap();
                assert_eq!(cf, en, "{e} at {n}");
            }
        }
    }

    #[test]
    fn huge_prefix_is_cheap() {
        let n = 1u64 << 60;
        // Blocks I_2, I_4, ..., I_58 are complete; I_60 = [2^60+1, ...) is not reached.
        let want: u64 = (1..30).map(|j| 1u64 << (2 * j)).sum();
        assert_eq!(prefix_count(&a_star(), n), Ok(want));
    }
}
