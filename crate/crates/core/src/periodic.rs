//! Eventually periodic subsets of ℕ.
//!
//! An [`EpSet`] is a list of segments `[start_i, start_{i+1})`, each carrying
//! a residue mask modulo one shared period `P`; `n` in segment `i` is a
//! member iff bit `n mod P` of that segment's mask is set. The last segment
//! is unbounded. Finite sets, progressions and all their boolean
//! combinations and translates are exactly representable.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::{Error, Rational, SetExpr};

/// Largest period an [`EpSet`] may carry.
pub const PERIOD_CAP: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Mask {
    period: u64,
    words: Vec<u64>,
    /// `cum[i]` = set bits in `words[..i]`.
    cum: Vec<u32>,
}

impl Mask {
    fn from_words(period: u64, mut words: Vec<u64>) -> Self {
        let rem = period % 64;
        if rem != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
        let mut cum = Vec::with_capacity(words.len() + 1);
        let mut acc = 0u32;
        cum.push(0);
        for w in &words {
            acc += w.count_ones();
            cum.push(acc);
        }
        Mask { period, words, cum }
    }

    fn filled(period: u64, bit: bool) -> Self {
        let n = period.div_ceil(64) as usize;
        Self::from_words(period, vec![if bit { u64::MAX } else { 0 }; n])
    }

    fn from_fn(period: u64, f: impl Fn(u64) -> bool) -> Self {
        let mut words = vec![0u64; period.div_ceil(64) as usize];
        for r in 0..period {
            if f(r) {
                words[(r / 64) as usize] |= 1 << (r % 64);
            }
        }
        Self::from_words(period, words)
    }

    pub(crate) fn bit(&self, r: u64) -> bool {
        let r = r % self.period;
        self.words[(r / 64) as usize] >> (r % 64) & 1 == 1
    }

    pub(crate) fn ones(&self) -> u64 {
        u64::from(*self.cum.last().unwrap())
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.ones() == 0
    }

    pub(crate) fn is_full(&self) -> bool {
        self.ones() == self.period
    }

    /// Set bits among residues `0..r`, for `r <= period`.
    fn rank(&self, r: u64) -> u64 {
        let w = (r / 64) as usize;
        let mut c = u64::from(self.cum[w]);
        if r % 64 != 0 {
            c += (self.words[w] & ((1u64 << (r % 64)) - 1)).count_ones() as u64;
        }
        c
    }

    /// `#{0 <= y < x : bit(y)}`.
    fn count_below(&self, x: u64) -> u64 {
        (x / self.period) * self.ones() + self.rank(x % self.period)
    }

    fn count_below_big(&self, x: &BigUint) -> BigUint {
        let p = BigUint::from(self.period);
        let (q, r) = x.div_rem(&p);
        q * self.ones() + self.rank(r.to_u64().unwrap())
    }

    fn lift(&self, period: u64) -> Mask {
        if period == self.period {
            return self.clone();
        }
        Mask::from_fn(period, |r| self.bit(r))
    }

    fn not(&self) -> Mask {
        Mask::from_words(self.period, self.words.iter().map(|w| !w).collect())
    }

    fn zip(&self, other: &Mask, f: impl Fn(u64, u64) -> u64) -> Mask {
        debug_assert_eq!(self.period, other.period);
        Mask::from_words(
            self.period,
            self.words.iter().zip(&other.words).map(|(a, b)| f(*a, *b)).collect(),
        )
    }

    /// `out[r] = self[r - t]`.
    fn rotate(&self, t: i64) -> Mask {
        let p = self.period as i128;
        let t = (t as i128).rem_euclid(p) as u64;
        if t == 0 {
            return self.clone();
        }
        Mask::from_fn(self.period, |r| self.bit((r + self.period - t) % self.period))
    }

    fn has_period(&self, p: u64) -> bool {
        (0..self.period).all(|r| self.bit(r) == self.bit(r % p))
    }

    /// Smallest residue `>= r` (cyclically, up to one full turn) with its bit set.
    fn next_set(&self, r: u64) -> Option<u64> {
        (0..self.period).map(|i| r + i).find(|&x| self.bit(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    And,
    Or,
    AndNot,
}

/// An eventually periodic subset of ℕ with exact operations.
#[derive(Clone, Debug)]
pub struct EpSet {
    period: u64,
    /// Strictly increasing starts, the first one is 1.
    segs: Vec<(u64, Arc<Mask>)>,
}

impl PartialEq for EpSet {
    fn eq(&self, other: &Self) -> bool {
        self.period == other.period
            && self.segs.len() == other.segs.len()
            && self.segs.iter().zip(&other.segs).all(|(a, b)| a.0 == b.0 && *a.1 == *b.1)
    }
}

impl Eq for EpSet {}

impl EpSet {
    fn single(mask: Mask) -> Self {
        EpSet {
            period: mask.period,
            segs: vec![(1, Arc::new(mask))],
        }
    }

    pub fn empty() -> Self {
        Self::single(Mask::filled(1, false))
    }

    pub fn full() -> Self {
        Self::single(Mask::filled(1, true))
    }

    /// `{n : n >= lo}`.
    pub fn from(lo: u64) -> Self {
        if lo <= 1 {
            return Self::full();
        }
        EpSet {
            period: 1,
            segs: vec![
                (1, Arc::new(Mask::filled(1, false))),
                (lo, Arc::new(Mask::filled(1, true))),
            ],
        }
    }

    pub fn finite(elements: &[u64]) -> Self {
        let f = Arc::new(Mask::filled(1, true));
        let e = Arc::new(Mask::filled(1, false));
        let mut segs = vec![(1u64, e.clone())];
        for &x in elements.iter().filter(|&&x| x >= 1) {
            segs.push((x, f.clone()));
            segs.push((x + 1, e.clone()));
        }
        let mut s = EpSet { period: 1, segs };
        s.normalize();
        s
    }

    pub fn ap(a: u64, d: u64) -> Self {
        let mask = Mask::from_fn(d, |r| r == a % d);
        let mut s = EpSet {
            period: d,
            segs: vec![(1, Arc::new(Mask::filled(d, false))), (a.max(1), Arc::new(mask))],
        };
        s.normalize();
        s
    }

    /// Members `n >= start`: `head[n - start]` for the first `head.len()`
    /// naturals, then `cycle[(n - start - head.len()) % cycle.len()]`.
    pub(crate) fn eventually(start: u64, head: &[bool], cycle: &[bool]) -> Result<Self, Error> {
        let p = cycle.len() as u64;
        if p == 0 || p > PERIOD_CAP {
            return Err(Error::Unsupported("period too large"));
        }
        let f = Arc::new(Mask::filled(p, true));
        let e = Arc::new(Mask::filled(p, false));
        let start = start.max(1);
        let mut segs = vec![(1u64, e.clone())];
        for (i, &b) in head.iter().enumerate() {
            segs.push((start + i as u64, if b { f.clone() } else { e.clone() }));
        }
        let t = start + head.len() as u64;
        let mask = Mask::from_fn(p, |r| cycle[((r + p - t % p) % p) as usize]);
        segs.push((t, Arc::new(mask)));
        let mut s = EpSet { period: p, segs };
        s.normalize();
        Ok(s)
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    /// Start of the unbounded last segment.
    pub fn threshold(&self) -> u64 {
        self.segs.last().unwrap().0
    }

    pub(crate) fn tail(&self) -> &Mask {
        &self.segs.last().unwrap().1
    }

    pub fn is_infinite(&self) -> bool {
        !self.tail().is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.segs.len() == 1 && self.segs[0].1.is_empty()
    }

    /// True when the set is all of ℕ.
    pub fn is_all(&self) -> bool {
        self.segs.len() == 1 && self.segs[0].1.is_full()
    }

    /// True when every `n >= threshold()` is a member.
    pub fn tail_full(&self) -> bool {
        self.tail().is_full()
    }

    /// Exact natural density.
    pub fn density(&self) -> Rational {
        Rational::new(self.tail().ones().into(), self.period.into())
    }

    /// Residues modulo [`period`](Self::period) that occur infinitely often.
    pub fn tail_residues(&self) -> Vec<u64> {
        (0..self.period).filter(|&r| self.tail().bit(r)).collect()
    }

    pub fn member(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        let i = self.segs.partition_point(|s| s.0 <= n) - 1;
        self.segs[i].1.bit(n % self.period)
    }

    /// Members in `[lo, hi)`.
    pub fn count_range(&self, lo: u64, hi: u64) -> u64 {
        let lo = lo.max(1);
        if hi <= lo {
            return 0;
        }
        let mut total = 0;
        for (i, (s, m)) in self.segs.iter().enumerate() {
            let e = self.segs.get(i + 1).map_or(u64::MAX, |x| x.0);
            let a = (*s).max(lo);
            let b = e.min(hi);
            if a < b {
                total += m.count_below(b) - m.count_below(a);
            }
        }
        total
    }

    /// Members in `[lo, hi)` for arbitrary-precision bounds.
    pub fn count_range_big(&self, lo: &BigUint, hi: &BigUint) -> BigUint {
        let one = BigUint::from(1u32);
        let lo = if *lo < one { one } else { lo.clone() };
        if *hi <= lo {
            return BigUint::default();
        }
        let mut total = BigUint::default();
        for (i, (s, m)) in self.segs.iter().enumerate() {
            let s = BigUint::from(*s);
            let a = if s > lo { s } else { lo.clone() };
            let b = match self.segs.get(i + 1) {
                Some(x) => {
                    let e = BigUint::from(x.0);
                    if e < *hi {
                        e
                    } else {
                        hi.clone()
                    }
                }
                None => hi.clone(),
            };
            if a < b {
                total += m.count_below_big(&b) - m.count_below_big(&a);
            }
        }
        total
    }

    /// Smallest member `>= n`.
    pub fn next_member(&self, n: u64) -> Option<u64> {
        let n = n.max(1);
        let mut i = self.segs.partition_point(|s| s.0 <= n) - 1;
        let mut from = n;
        loop {
            let m = &self.segs[i].1;
            let end = self.segs.get(i + 1).map(|x| x.0);
            if !m.is_empty() {
                let r = m.next_set(from % self.period).unwrap();
                let cand = from.checked_add(r - from % self.period)?;
                if end.map_or(true, |e| cand < e) {
                    return Some(cand);
                }
            }
            i += 1;
            from = end?;
        }
    }

    /// Largest member, when the set is finite and non-empty.
    pub fn max_member(&self) -> Option<u64> {
        if self.is_infinite() {
            return None;
        }
        let p = self.period;
        for i in (0..self.segs.len() - 1).rev() {
            let (s, m) = &self.segs[i];
            if m.is_empty() {
                continue;
            }
            let e = self.segs[i + 1].0;
            let lo = (*s).max(e.saturating_sub(p));
            if let Some(n) = (lo..e).rev().find(|&n| m.bit(n % p)) {
                return Some(n);
            }
        }
        None
    }

    fn lift(&self, period: u64) -> EpSet {
        if period == self.period {
            return self.clone();
        }
        let mut memo: Vec<(*const Mask, Arc<Mask>)> = Vec::new();
        let segs = self
            .segs
            .iter()
            .map(|(s, m)| {
                let key = Arc::as_ptr(m);
                let lifted = match memo.iter().find(|x| x.0 == key) {
                    Some(x) => x.1.clone(),
                    None => {
                        let l = Arc::new(m.lift(period));
                        memo.push((key, l.clone()));
                        l
                    }
                };
                (*s, lifted)
            })
            .collect();
        EpSet { period, segs }
    }

    fn combine(&self, other: &EpSet, op: Op) -> Result<EpSet, Error> {
        let p = self.period.lcm(&other.period);
        if p > PERIOD_CAP {
            return Err(Error::Unsupported("period too large"));
        }
        let a = self.lift(p);
        let b = other.lift(p);
        let mut starts: Vec<u64> = a.segs.iter().chain(b.segs.iter()).map(|s| s.0).collect();
        starts.sort_unstable();
        starts.dedup();
        let mut memo: BTreeMap<(usize, usize), Arc<Mask>> = BTreeMap::new();
        let mut segs = Vec::with_capacity(starts.len());
        let (mut i, mut j) = (0usize, 0usize);
        for s in starts {
            while i + 1 < a.segs.len() && a.segs[i + 1].0 <= s {
                i += 1;
            }
            while j + 1 < b.segs.len() && b.segs[j + 1].0 <= s {
                j += 1;
            }
            let ka = Arc::as_ptr(&a.segs[i].1) as usize;
            let kb = Arc::as_ptr(&b.segs[j].1) as usize;
            let m = memo
                .entry((ka, kb))
                .or_insert_with(|| {
                    let (x, y) = (&a.segs[i].1, &b.segs[j].1);
                    Arc::new(match op {
                        Op::And => x.zip(y, |u, v| u & v),
                        Op::Or => x.zip(y, |u, v| u | v),
                        Op::AndNot => x.zip(y, |u, v| u & !v),
                    })
                })
                .clone();
            segs.push((s, m));
        }
        let mut out = EpSet { period: p, segs };
        out.normalize();
        Ok(out)
    }

    pub fn and(&self, other: &EpSet) -> Result<EpSet, Error> {
        self.combine(other, Op::And)
    }

    pub fn or(&self, other: &EpSet) -> Result<EpSet, Error> {
        self.combine(other, Op::Or)
    }

    pub fn and_not(&self, other: &EpSet) -> Result<EpSet, Error> {
        self.combine(other, Op::AndNot)
    }

    /// Complement within ℕ.
    pub fn not(&self) -> EpSet {
        let mut memo: Vec<(*const Mask, Arc<Mask>)> = Vec::new();
        let segs = self
            .segs
            .iter()
            .map(|(s, m)| {
                let key = Arc::as_ptr(m);
                let n = match memo.iter().find(|x| x.0 == key) {
                    Some(x) => x.1.clone(),
                    None => {
                        let n = Arc::new(m.not());
                        memo.push((key, n.clone()));
                        n
                    }
                };
                (*s, n)
            })
            .collect();
        EpSet { period: self.period, segs }
    }

    /// `(self + t) ∩ ℕ`.
    pub fn translate(&self, t: i64) -> EpSet {
        if t == 0 {
            return self.clone();
        }
        let empty = Arc::new(Mask::filled(self.period, false));
        let mut segs: Vec<(u64, Arc<Mask>)> = Vec::with_capacity(self.segs.len() + 1);
        if t > 0 {
            segs.push((1, empty));
        }
        for (i, (s, m)) in self.segs.iter().enumerate() {
            let ns = *s as i128 + t as i128;
            let end = self.segs.get(i + 1).map(|x| x.0 as i128 + t as i128);
            if end.is_some_and(|e| e <= 1) {
                continue;
            }
            let ns = ns.max(1);
            if ns > u64::MAX as i128 {
                break;
            }
            let rotated = Arc::new(m.rotate(t));
            if segs.last().is_some_and(|x| x.0 == ns as u64) {
                segs.pop();
            }
            segs.push((ns as u64, rotated));
        }
        let mut out = EpSet {
            period: self.period,
            segs,
        };
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        let p = self.period;
        let full = Arc::new(Mask::filled(p, true));
        let empty = Arc::new(Mask::filled(p, false));
        // Short segments only see a few residues; canonicalise the masks of
        // length-one segments so that runs of finite elements merge.
        let n = self.segs.len();
        for i in 0..n {
            if i + 1 < n && self.segs[i + 1].0 == self.segs[i].0 + 1 {
                let bit = self.segs[i].1.bit(self.segs[i].0 % p);
                self.segs[i].1 = if bit { full.clone() } else { empty.clone() };
            }
        }
        let mut out: Vec<(u64, Arc<Mask>)> = Vec::with_capacity(n);
        for (s, m) in self.segs.drain(..) {
            match out.last() {
                Some(last) if Arc::ptr_eq(&last.1, &m) || *last.1 == *m => {}
                _ => out.push((s, m)),
            }
        }
        self.segs = out;
        self.reduce_period();
    }

    fn reduce_period(&mut self) {
        let mut p = self.period;
        let mut q = 2u64;
        let mut rest = p;
        let mut primes = Vec::new();
        while q * q <= rest {
            if rest % q == 0 {
                primes.push(q);
                while rest % q == 0 {
                    rest /= q;
                }
            }
            q += 1;
        }
        if rest > 1 {
            primes.push(rest);
        }
        for q in primes {
            while p % q == 0 && self.segs.iter().all(|(_, m)| m.has_period(p / q)) {
                p /= q;
            }
        }
        if p != self.period {
            let mut memo: Vec<(*const Mask, Arc<Mask>)> = Vec::new();
            for seg in &mut self.segs {
                let key = Arc::as_ptr(&seg.1);
                let r = match memo.iter().find(|x| x.0 == key) {
                    Some(x) => x.1.clone(),
                    None => {
                        let m = &seg.1;
                        let r = Arc::new(Mask::from_fn(p, |r| m.bit(r)));
                        memo.push((key, r.clone()));
                        r
                    }
                };
                seg.1 = r;
            }
            self.period = p;
            let segs = core::mem::take(&mut self.segs);
            for (s, m) in segs {
                match self.segs.last() {
                    Some(last) if *last.1 == *m => {}
                    _ => self.segs.push((s, m)),
                }
            }
        }
    }

    /// An equivalent expression built from finite sets and progressions.
    pub fn to_expr(&self) -> SetExpr {
        const SMALL: u64 = 4096;
        let p = self.period;
        let mut finite: Vec<u64> = Vec::new();
        let mut parts: Vec<SetExpr> = Vec::new();
        for (i, (s, m)) in self.segs.iter().enumerate() {
            if m.is_empty() {
                continue;
            }
            let end = self.segs.get(i + 1).map(|x| x.0);
            match end {
                Some(e) if m.count_below(e) - m.count_below(*s) <= SMALL => {
                    finite.extend((*s..e).filter(|&n| m.bit(n % p)));
                }
                _ => {
                    if m.is_full() {
                        let a = SetExpr::ap(*s, 1).unwrap();
                        parts.push(match end {
                            Some(e) => SetExpr::diff(a, SetExpr::ap(e, 1).unwrap()),
                            None => a,
                        });
                        continue;
                    }
                    for r in (0..p).filter(|&r| m.bit(r)) {
                        let first = s + (r + p - s % p) % p;
                        let a = SetExpr::ap(first, p).unwrap();
                        parts.push(match end {
                            Some(e) => {
                                let after = e + (r + p - e % p) % p;
                                SetExpr::diff(a, SetExpr::ap(after, p).unwrap())
                            }
                            None => a,
                        });
                    }
                }
            }
        }
        if !finite.is_empty() {
            parts.insert(0, SetExpr::finite(finite).unwrap());
        }
        SetExpr::union_all(parts)
    }
}
