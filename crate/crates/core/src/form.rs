//! Lowering of expressions to boolean formulas over eventually periodic
//! leaves and a small set of non-periodic atoms.
//!
//! `lower(e, t)` denotes `{n : n - t >= 1 and n - t ∈ e}`. Translates only
//! move `t`, complements are taken inside ℕ, and everything periodic is
//! folded into [`EpSet`] leaves as early as possible.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::{Branch, EpSet, Error, IntervalScheme, Node, SetExpr};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Atom {
    /// `{n : n - shift ∈ Blocks(scheme, index)}`.
    Block {
        scheme: IntervalScheme,
        index: SetExpr,
        shift: i64,
    },
    /// `{n : n - shift ∈ Codes(branch, stride)}`.
    Codes {
        branch: Branch,
        stride: u64,
        shift: i64,
    },
}

impl Atom {
    pub(crate) fn shift(&self) -> i64 {
        match self {
            Atom::Block { shift, .. } | Atom::Codes { shift, .. } => *shift,
        }
    }

    fn shifted(&self, t: i64) -> Result<Atom, Error> {
        let mut a = self.clone();
        match &mut a {
            Atom::Block { shift, .. } | Atom::Codes { shift, .. } => {
                *shift = shift.checked_add(t).ok_or(Error::Overflow)?;
            }
        }
        Ok(a)
    }

    pub(crate) fn member(&self, n: u64) -> bool {
        let m = n as i128 - self.shift() as i128;
        if m < 1 || m > u64::MAX as i128 {
            return false;
        }
        let m = m as u64;
        match self {
            Atom::Block { scheme, index, .. } => scheme.locate(m).is_some_and(|i| index.member(i)),
            Atom::Codes { branch, stride, .. } => m % stride == 0 && branch.is_code(m / stride),
        }
    }

    pub(crate) fn to_expr(&self) -> SetExpr {
        let base = match self {
            Atom::Block { scheme, index, .. } => SetExpr::blocks(*scheme, index.clone()),
            Atom::Codes { branch, stride, .. } => SetExpr::codes(branch.clone(), *stride).unwrap(),
        };
        SetExpr::shift(base, self.shift())
    }
}

/// Interning table for atoms shared by the formulas of one analysis.
#[derive(Clone, Debug, Default)]
pub(crate) struct Ctx {
    pub(crate) atoms: Vec<Atom>,
}

impl Ctx {
    pub(crate) fn intern(&mut self, a: Atom) -> usize {
        if let Some(i) = self.atoms.iter().position(|b| *b == a) {
            return i;
        }
        self.atoms.push(a);
        self.atoms.len() - 1
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Formula {
    Ep(EpSet),
    Atom(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub(crate) fn ep(s: EpSet) -> Formula {
        Formula::Ep(s)
    }

    fn as_ep(&self) -> Option<&EpSet> {
        match self {
            Formula::Ep(s) => Some(s),
            _ => None,
        }
    }

    pub(crate) fn not(a: Formula) -> Formula {
        match a {
            Formula::Ep(s) => Formula::Ep(s.not()),
            Formula::Not(x) => *x,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub(crate) fn and(a: Formula, b: Formula) -> Result<Formula, Error> {
        if let (Some(x), Some(y)) = (a.as_ep(), b.as_ep()) {
            return Ok(Formula::Ep(x.and(y)?));
        }
        for (p, q) in [(&a, &b), (&b, &a)] {
            if let Some(x) = p.as_ep() {
                if x.is_empty() {
                    return Ok(Formula::Ep(EpSet::empty()));
                }
                if x.is_all() {
                    return Ok(q.clone());
                }
            }
        }
        Ok(Formula::And(Box::new(a), Box::new(b)))
    }

    pub(crate) fn or(a: Formula, b: Formula) -> Result<Formula, Error> {
        if let (Some(x), Some(y)) = (a.as_ep(), b.as_ep()) {
            return Ok(Formula::Ep(x.or(y)?));
        }
        for (p, q) in [(&a, &b), (&b, &a)] {
            if let Some(x) = p.as_ep() {
                if x.is_empty() {
                    return Ok(q.clone());
                }
                if x.is_all() {
                    return Ok(Formula::Ep(EpSet::full()));
                }
            }
        }
        Ok(Formula::Or(Box::new(a), Box::new(b)))
    }

    /// Atom ids occurring in the formula, sorted.
    pub(crate) fn atoms(&self) -> Vec<usize> {
        fn walk(f: &Formula, out: &mut Vec<usize>) {
            match f {
                Formula::Ep(_) => {}
                Formula::Atom(i) => out.push(*i),
                Formula::Not(a) => walk(a, out),
                Formula::And(a, b) | Formula::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Substitutes every atom by the constant `value(id)` and folds.
    pub(crate) fn eval(&self, value: &dyn Fn(usize) -> bool) -> Result<EpSet, Error> {
        Ok(match self {
            Formula::Ep(s) => s.clone(),
            Formula::Atom(i) => {
                if value(*i) {
                    EpSet::full()
                } else {
                    EpSet::empty()
                }
            }
            Formula::Not(a) => a.eval(value)?.not(),
            Formula::And(a, b) => {
                let x = a.eval(value)?;
                if x.is_empty() {
                    return Ok(x);
                }
                x.and(&b.eval(value)?)?
            }
            Formula::Or(a, b) => {
                let x = a.eval(value)?;
                if x.is_all() {
                    return Ok(x);
                }
                x.or(&b.eval(value)?)?
            }
        })
    }

    /// Pointwise truth at `n`, given atom values there.
    #[cfg(test)]
    pub(crate) fn holds(&self, n: u64, value: &dyn Fn(usize) -> bool) -> bool {
        match self {
            Formula::Ep(s) => s.member(n),
            Formula::Atom(i) => value(*i),
            Formula::Not(a) => !a.holds(n, value),
            Formula::And(a, b) => a.holds(n, value) && b.holds(n, value),
            Formula::Or(a, b) => a.holds(n, value) || b.holds(n, value),
        }
    }

    #[cfg(test)]
    pub(crate) fn member(&self, ctx: &Ctx, n: u64) -> bool {
        n >= 1 && self.holds(n, &|i| ctx.atoms[i].member(n))
    }

    /// `{n : n - t >= 1 and n - t ∈ self}`.
    pub(crate) fn shifted(&self, ctx: &mut Ctx, t: i64) -> Result<Formula, Error> {
        if t == 0 {
            return Ok(self.clone());
        }
        Ok(match self {
            Formula::Ep(s) => Formula::Ep(s.translate(t)),
            Formula::Atom(i) => {
                let a = ctx.atoms[*i].shifted(t)?;
                let id = ctx.intern(a);
                Formula::and(domain(t), Formula::Atom(id))?
            }
            Formula::Not(a) => Formula::and(domain(t), Formula::not(a.shifted(ctx, t)?))?,
            Formula::And(a, b) => Formula::and(a.shifted(ctx, t)?, b.shifted(ctx, t)?)?,
            Formula::Or(a, b) => Formula::or(a.shifted(ctx, t)?, b.shifted(ctx, t)?)?,
        })
    }

    pub(crate) fn to_expr(&self, ctx: &Ctx) -> SetExpr {
        match self {
            Formula::Ep(s) => s.to_expr(),
            Formula::Atom(i) => ctx.atoms[*i].to_expr(),
            Formula::Not(a) => SetExpr::complement(a.to_expr(ctx)),
            Formula::And(a, b) => SetExpr::inter(a.to_expr(ctx), b.to_expr(ctx)),
            Formula::Or(a, b) => SetExpr::union(a.to_expr(ctx), b.to_expr(ctx)),
        }
    }
}

/// `{n : n - t >= 1}`.
pub(crate) fn domain(t: i64) -> Formula {
    Formula::Ep(if t >= 0 { EpSet::from(t as u64 + 1) } else { EpSet::full() })
}

fn shift_points(points: &[u64], t: i64) -> Vec<u64> {
    points
        .iter()
        .filter_map(|&x| {
            let y = x as i128 + t as i128;
            (y >= 1 && y <= u64::MAX as i128).then_some(y as u64)
        })
        .collect()
}

/// Lowers `e` translated by `t`.
pub(crate) fn lower(ctx: &mut Ctx, e: &SetExpr, t: i64) -> Result<Formula, Error> {
    Ok(match e.node() {
        Node::Empty => Formula::ep(EpSet::empty()),
        Node::Full => domain(t),
        Node::Finite(v) => Formula::ep(EpSet::finite(&shift_points(v, t))),
        Node::Ap { a, d } => Formula::ep(EpSet::ap(*a, *d).translate(t)),
        Node::Blocks { scheme, index } => {
            if let IntervalScheme::Linear { step } = scheme {
                if let Some(s) = linear_blocks(*step, index)? {
                    return Ok(Formula::ep(s.translate(t)));
                }
            }
            Formula::Atom(ctx.intern(Atom::Block {
                scheme: *scheme,
                index: index.clone(),
                shift: t,
            }))
        }
        Node::Codes { branch, stride } => Formula::Atom(ctx.intern(Atom::Codes {
            branch: branch.clone(),
            stride: *stride,
            shift: t,
        })),
        Node::Union(a, b) => Formula::or(lower(ctx, a, t)?, lower(ctx, b, t)?)?,
        Node::Inter(a, b) => Formula::and(lower(ctx, a, t)?, lower(ctx, b, t)?)?,
        Node::Diff(a, b) => Formula::and(lower(ctx, a, t)?, Formula::not(lower(ctx, b, t)?))?,
        Node::Complement(a) => Formula::and(domain(t), Formula::not(lower(ctx, a, t)?))?,
        Node::Translate(inner, k) => {
            let s = t.checked_add(*k).ok_or(Error::Overflow)?;
            Formula::and(domain(t), lower(ctx, inner, s)?)?
        }
    })
}

/// Positions of `Blocks(lin(step), index)` when the index is eventually
/// periodic: `n` lies in `I_m` with `m = n / step`.
fn linear_blocks(step: u64, index: &SetExpr) -> Result<Option<EpSet>, Error> {
    let mut ctx = Ctx::default();
    let f = lower(&mut ctx, index, 0)?;
    let Formula::Ep(idx) = f else {
        return Ok(None);
    };
    let p = idx.period();
    let period = step.checked_mul(p).filter(|&x| x <= crate::periodic::PERIOD_CAP);
    let Some(period) = period else {
        return Err(Error::Unsupported("period too large"));
    };
    // Head: blocks below the index threshold, listed explicitly.
    let t = idx.threshold();
    let start = step;
    let head_end = t.checked_mul(step).ok_or(Error::Overflow)?;
    if head_end - start > 1 << 24 {
        return Err(Error::Unsupported("linear head too long"));
    }
    let head: Vec<bool> = (start..head_end).map(|n| idx.member(n / step)).collect();
    let cycle: Vec<bool> = (0..period).map(|i| idx.member((head_end + i) / step)).collect();
    EpSet::eventually(start, &head, &cycle).map(Some)
}
