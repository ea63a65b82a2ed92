//! Structural analysis of lowered formulas.
//!
//! Three shapes are decided exactly:
//!
//! * periodic: no atoms, the set is an [`EpSet`];
//! * sparse: only code atoms of one stride, the set agrees with a periodic
//!   background `g0` outside a set of code points (one per dyadic level and
//!   atom), whose membership is eventually periodic in the level;
//! * block form: only block atoms over one scheme with diverging gaps.
//!   Beyond a start block `m0`, block `m` splits into a core, on which
//!   every atom is constant and the set is the periodic pattern `g_v` for
//!   the atom vector `v` of `m`, and boundary zones of bounded width. Which
//!   pattern each block gets, and which zone points are members, are again
//!   sets of block indices, analysed recursively.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::densities::ClassicalKind;
use crate::form::{lower, Atom, Ctx, Formula};
use crate::ideals::Witness;
use crate::periodic::PERIOD_CAP;
use crate::scheme::pow_mod;
use crate::{Branch, EpSet, Error, IntervalScheme, Rational, SetExpr};

const MAX_DEPTH: u32 = 6;
const MAX_SPARSE_ATOMS: usize = 8;
const MAX_BLOCK_ATOMS: usize = 6;
const MAX_ZONE_WIDTH: u64 = 4096;
const MAX_LEVEL_STEPS: usize = 1 << 18;
const MAX_DENSITY_PERIOD: u64 = 4096;

pub(crate) struct Analysis {
    pub(crate) ctx: Ctx,
    pub(crate) f: Formula,
    pub(crate) kind: Kind,
}

pub(crate) enum Kind {
    Periodic(EpSet),
    Sparse(Sparse),
    Blocks(Box<BlockForm>),
}

pub(crate) fn analyze(e: &SetExpr) -> Result<Analysis, Error> {
    let mut ctx = Ctx::default();
    let f = lower(&mut ctx, e, 0)?;
    Analysis::new(ctx, f, 0)
}

impl Analysis {
    pub(crate) fn new(ctx: Ctx, f: Formula, depth: u32) -> Result<Analysis, Error> {
        if depth > MAX_DEPTH {
            return Err(Error::Unsupported("index nesting too deep"));
        }
        let ids = f.atoms();
        let kind = if ids.is_empty() {
            Kind::Periodic(f.eval(&|_| false)?)
        } else if ids.iter().all(|&i| matches!(ctx.atoms[i], Atom::Codes { .. })) {
            Kind::Sparse(Sparse::build(&ctx, &f, &ids)?)
        } else if ids.iter().all(|&i| matches!(ctx.atoms[i], Atom::Block { .. })) {
            Kind::Blocks(Box::new(BlockForm::build(&ctx, &f, &ids, depth)?))
        } else {
            return Err(Error::Unsupported("blocks mixed with code points"));
        };
        Ok(Analysis { ctx, f, kind })
    }

    pub(crate) fn expr(&self) -> SetExpr {
        self.f.to_expr(&self.ctx)
    }

    pub(crate) fn is_infinite(&self) -> Result<bool, Error> {
        Ok(self.infinite_witness()?.is_some())
    }

    /// A witness of infinitude, or `None` when the set is finite.
    pub(crate) fn infinite_witness(&self) -> Result<Option<Witness>, Error> {
        match &self.kind {
            Kind::Periodic(s) => Ok(progression(s, 0)),
            Kind::Sparse(sp) => {
                if let Some(w) = progression(&sp.g0, 2 * sp.points.len() as u64) {
                    return Ok(Some(w));
                }
                Ok(sp.hits.first().map(|&(j, level)| Witness::CodePoints {
                    branch: sp.points[j].0.clone(),
                    stride: sp.stride,
                    shift: sp.points[j].1,
                    from_level: level,
                    step: sp.cycle_len,
                }))
            }
            Kind::Blocks(b) => b.infinite_witness(),
        }
    }

    /// For a finite set, some `B` with the set inside `[1, B)`.
    pub(crate) fn upper_bound(&self) -> Result<BigUint, Error> {
        match &self.kind {
            Kind::Periodic(s) => Ok(BigUint::from(s.threshold())),
            Kind::Sparse(sp) => sp.upper_bound(),
            Kind::Blocks(b) => b.upper_bound(),
        }
    }

    /// The exact classical density of the given kind where the shape
    /// determines it.
    pub(crate) fn exact_density(&self, kind: ClassicalKind) -> Result<Rational, Error> {
        match &self.kind {
            Kind::Periodic(s) => Ok(s.density()),
            Kind::Sparse(sp) => Ok(sp.g0.density()),
            Kind::Blocks(b) => b.exact_density(kind),
        }
    }

    /// `Some(c)` with `0 < c <= upper density` when the upper asymptotic
    /// density is positive, `None` when it is zero.
    pub(crate) fn positive_density(&self) -> Result<Option<Rational>, Error> {
        let pos = |r: Rational| if r.is_zero() { None } else { Some(r) };
        match &self.kind {
            Kind::Periodic(s) => Ok(pos(s.density())),
            Kind::Sparse(sp) => Ok(pos(sp.g0.density())),
            Kind::Blocks(b) => b.positive_density(),
        }
    }

    /// Upper density of the index set weighted by `m^(e-1)`, as needed for
    /// blocks over polynomial-type schemes: the periodic part's density.
    fn weighted_density(&self) -> Result<Rational, Error> {
        match &self.kind {
            Kind::Periodic(s) => Ok(s.density()),
            Kind::Sparse(sp) => Ok(sp.g0.density()),
            Kind::Blocks(_) => {
                if self.is_infinite()? {
                    Err(Error::Unsupported("nested block index"))
                } else {
                    Ok(Rational::zero())
                }
            }
        }
    }

    /// Pieces `n` of the dyadic partition `P_n = 2^(n-1)·odd` that meet the
    /// set in infinitely many points.
    pub(crate) fn piece_profile(&self) -> Result<Profile, Error> {
        match &self.kind {
            Kind::Periodic(s) => Ok(periodic_profile(s)),
            Kind::Sparse(sp) => sp.piece_profile(),
            Kind::Blocks(b) => b.piece_profile(),
        }
    }

    /// Indices of scheme intervals fully contained in the set, as an
    /// analysed index set. `None` when the shape does not give one.
    pub(crate) fn contained_blocks(&self, scheme: IntervalScheme) -> Result<Option<Analysis>, Error> {
        match &self.kind {
            Kind::Periodic(s) if s.tail_full() => {
                let from = scheme.locate(s.threshold()).map_or(1, |m| m + 1);
                Ok(Some(Analysis {
                    ctx: Ctx::default(),
                    f: Formula::ep(EpSet::from(from)),
                    kind: Kind::Periodic(EpSet::from(from)),
                }))
            }
            Kind::Blocks(b) if b.scheme == scheme => b.contained().map(Some),
            _ => Ok(None),
        }
    }

    /// The periodic part: equal to the set outside a set of density zero.
    pub(crate) fn periodic_part(&self) -> Option<&EpSet> {
        match &self.kind {
            Kind::Periodic(s) => Some(s),
            Kind::Sparse(sp) => Some(&sp.g0),
            Kind::Blocks(_) => None,
        }
    }
}

/// A progression inside the tail of `s`, if the tail is non-empty.
fn progression(s: &EpSet, exceptions: u64) -> Option<Witness> {
    let p = s.period();
    let t = s.threshold();
    let r = *s.tail_residues().first()?;
    let a = t + (r + p - t % p) % p;
    Some(Witness::Progression { a, d: p, exceptions })
}

/// Sets of pieces: finitely many listed ones, optionally all `n >= from`,
/// and progressions `start + i·step`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Profile {
    pub(crate) pieces: BTreeSet<u64>,
    pub(crate) from: Option<u64>,
    pub(crate) progressions: BTreeSet<(u64, u64)>,
}

impl Profile {
    fn add(&mut self, n: u64) {
        self.pieces.insert(n);
    }

    fn add_from(&mut self, n: u64) {
        self.from = Some(self.from.map_or(n, |f| f.min(n)));
    }

    fn add_progression(&mut self, start: u64, step: u64) {
        self.progressions.insert((start, step));
    }

    fn merge(&mut self, other: &Profile) {
        self.pieces.extend(other.pieces.iter().copied());
        self.progressions.extend(other.progressions.iter().copied());
        if let Some(f) = other.from {
            self.add_from(f);
        }
    }

    pub(crate) fn contains(&self, n: u64) -> bool {
        self.pieces.contains(&n)
            || self.from.is_some_and(|f| n >= f)
            || self.progressions.iter().any(|&(a, d)| n >= a && (n - a) % d == 0)
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pieces.is_empty() && self.from.is_none() && self.progressions.is_empty()
    }

    pub(crate) fn min(&self) -> Option<u64> {
        let p = self.progressions.iter().map(|x| x.0);
        self.pieces.iter().copied().chain(self.from).chain(p).min()
    }

    /// `Σ_{n ∈ profile} 2^-n`, summing the eventually periodic tail in closed form.
    pub(crate) fn weight(&self) -> Rational {
        let period = self.progressions.iter().fold(1u64, |l, x| l.lcm(&x.1));
        let mut t = self.from.unwrap_or(1);
        t = t.max(self.pieces.iter().max().map_or(1, |m| m + 1));
        t = t.max(self.progressions.iter().map(|x| x.0).max().unwrap_or(1));
        let mut head = Rational::zero();
        for n in 1..t {
            if self.contains(n) {
                head += dyadic(n);
            }
        }
        let mut cycle = Rational::zero();
        for n in t..t + period {
            if self.contains(n) {
                cycle += dyadic(n);
            }
        }
        head + cycle / (Rational::one() - dyadic(period))
    }
}

pub(crate) fn dyadic(n: u64) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << n as usize)
}

fn periodic_profile(s: &EpSet) -> Profile {
    let p = s.period();
    let a = p.trailing_zeros();
    let low = (1u64 << a) - 1;
    let mut out = Profile::default();
    for r in s.tail_residues() {
        let y = r & low;
        if y == 0 {
            out.add_from(u64::from(a) + 1);
        } else {
            out.add(u64::from(y.trailing_zeros()) + 1);
        }
    }
    out
}

pub(crate) struct Sparse {
    pub(crate) g0: EpSet,
    pub(crate) stride: u64,
    pub(crate) points: Vec<(Branch, i64)>,
    /// Levels from `cycle_start` on repeat with period `cycle_len`.
    pub(crate) cycle_start: u64,
    pub(crate) cycle_len: u64,
    /// `(atom, level)` pairs in one cycle whose code point is a member.
    pub(crate) hits: Vec<(usize, u64)>,
}

const ESCAPED: i64 = i64::MAX;

impl Sparse {
    fn build(ctx: &Ctx, f: &Formula, ids: &[usize]) -> Result<Sparse, Error> {
        let mut stride = None;
        let mut points = Vec::new();
        for &i in ids {
            if let Atom::Codes { branch, stride: s, shift } = &ctx.atoms[i] {
                if *stride.get_or_insert(*s) != *s {
                    return Err(Error::Unsupported("code points of different strides"));
                }
                points.push((branch.clone(), *shift));
            }
        }
        let s = stride.unwrap();
        let j = points.len();
        if j > MAX_SPARSE_ATOMS {
            return Err(Error::Unsupported("too many code atoms"));
        }
        let masks: Vec<EpSet> = (0..1usize << j)
            .map(|m| f.eval(&|i| m >> ids.binary_search(&i).unwrap() & 1 == 1))
            .collect::<Result<_, _>>()?;
        let mut period = 1u64;
        let mut thr = 1u64;
        for g in &masks {
            period = period.lcm(&g.period());
            if period > PERIOD_CAP {
                return Err(Error::Unsupported("period too large"));
            }
            thr = thr.max(g.threshold());
        }
        let tmin = points.iter().map(|p| p.1).min().unwrap();
        let mut radius = 1i64;
        for a in &points {
            for b in &points {
                radius = radius.max((a.1 - b.1).abs() / s as i64 + 1);
            }
        }
        let heads = points.iter().map(|p| p.0.head().len() as u64).max().unwrap();
        // From `start` on, a code point at level L can only coincide with
        // codes at levels L-1, L, L+1, and lies beyond every threshold.
        let mut start = heads + 2;
        loop {
            if start > 120 {
                return Err(Error::Unsupported("levels out of range"));
            }
            let low = (s as i128) << start;
            if (1i128 << (start - 1)) > radius as i128 && low + tmin as i128 >= thr as i128 {
                break;
            }
            start += 1;
        }

        let pm = |x: &BigInt| -> u64 { x.mod_floor(&BigInt::from(period)).to_u64().unwrap() };
        let code = |b: &Branch, l: u64| BigInt::from(b.code_big(l));
        let mut res: Vec<u64> = points.iter().map(|p| pm(&code(&p.0, start))).collect();
        // diffs[(i*j + jj)*3 + δ+1] = code_{L+δ}(x_i) - code_L(x_j), clipped.
        let clip = |x: &BigInt| -> i64 {
            match x.to_i64() {
                Some(v) if v.abs() <= radius => v,
                _ => ESCAPED,
            }
        };
        let mut diffs = Vec::with_capacity(j * j * 3);
        for a in &points {
            for b in &points {
                for d in [-1i64, 0, 1] {
                    let x = code(&a.0, (start as i64 + d) as u64) - code(&b.0, start);
                    diffs.push(clip(&x));
                }
            }
        }
        let mut seen: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
        let mut per_level: Vec<Vec<usize>> = Vec::new();
        let mut level = start;
        let (cycle_start, cycle_len) = loop {
            let mut key: Vec<i64> = points
                .iter()
                .map(|p| ((level - p.0.head().len() as u64) % p.0.cycle().len() as u64) as i64)
                .collect();
            key.extend(res.iter().map(|&r| r as i64));
            key.extend(diffs.iter().copied());
            if let Some(&l1) = seen.get(&key) {
                break (l1, level - l1);
            }
            if seen.len() >= MAX_LEVEL_STEPS {
                return Err(Error::Budget {
                    limit: MAX_LEVEL_STEPS as u64,
                });
            }
            seen.insert(key, level);
            let mut here = Vec::new();
            for (jj, b) in points.iter().enumerate() {
                let mut mask = 1usize << jj;
                for (ii, a) in points.iter().enumerate() {
                    if ii == jj || (b.1 - a.1) % s as i64 != 0 {
                        continue;
                    }
                    let want = (b.1 - a.1) / s as i64;
                    if (0..3).any(|d| diffs[(ii * j + jj) * 3 + d] == want) {
                        mask |= 1 << ii;
                    }
                }
                let p = ((s % period) as u128 * res[jj] as u128 + b.1.rem_euclid(period as i64) as u128)
                    % period as u128;
                if masks[mask].tail().bit(p as u64) {
                    here.push(jj);
                }
            }
            per_level.push(here);
            for (jj, b) in points.iter().enumerate() {
                res[jj] = ((2 * res[jj] as u128 + b.0.bit(level + 1) as u128) % period as u128) as u64;
            }
            for (ii, a) in points.iter().enumerate() {
                for (jj, b) in points.iter().enumerate() {
                    for d in 0..3usize {
                        let slot = &mut diffs[(ii * j + jj) * 3 + d];
                        if *slot == ESCAPED {
                            continue;
                        }
                        let up = a.0.bit((level as i64 + d as i64) as u64) as i64;
                        let v = 2 * *slot + up - b.0.bit(level + 1) as i64;
                        *slot = if v.abs() > radius { ESCAPED } else { v };
                    }
                }
            }
            level += 1;
        };
        let mut hits = Vec::new();
        for l in cycle_start..cycle_start + cycle_len {
            for &jj in &per_level[(l - start) as usize] {
                hits.push((jj, l));
            }
        }
        Ok(Sparse {
            g0: masks[0].clone(),
            stride: s,
            points,
            cycle_start,
            cycle_len,
            hits,
        })
    }

    fn upper_bound(&self) -> Result<BigUint, Error> {
        if self.g0.is_infinite() || !self.hits.is_empty() {
            return Err(Error::InvalidValue("set is infinite"));
        }
        let tmax = self.points.iter().map(|p| p.1).max().unwrap().max(0) as u64;
        let top = (BigUint::from(self.stride) << (self.cycle_start as usize + 1)) + tmax + 1u32;
        Ok(top.max(BigUint::from(self.g0.threshold())))
    }

    fn piece_profile(&self) -> Result<Profile, Error> {
        let mut out = periodic_profile(&self.g0);
        let lam = self.cycle_len;
        if !self.hits.is_empty() && lam > 4096 {
            return Err(Error::Unsupported("level cycle too long"));
        }
        for &(j, level) in &self.hits {
            let (b, t) = &self.points[j];
            // Along levels level + iΛ the code points converge 2-adically to
            // N / (2^Λ - 1), so their 2-adic valuation settles at v2(N).
            let mut w = BigInt::zero();
            for i in 1..=lam {
                w = (w << 1usize) + u32::from(b.bit(level + i));
            }
            let n = BigInt::from(*t) * ((BigInt::one() << lam as usize) - 1u32) - w * self.stride;
            if let Some(v) = n.magnitude().trailing_zeros() {
                out.add(v + 1);
            }
        }
        Ok(out)
    }
}

/// `g` with `v2(k_m + u)` determined by `v2(g(m))`, as integer coefficients
/// (constant first), and the map from `v2(g(m))` to the piece index.
fn zone_poly(scheme: IntervalScheme, u: i64) -> (Vec<BigInt>, u64) {
    match scheme {
        // 2(k_m + u) = m^2 + m + 2u
        IntervalScheme::Triangular => (alloc::vec![BigInt::from(2 * u), BigInt::one(), BigInt::one()], 0),
        IntervalScheme::Polynomial { exponent } => {
            let mut c = alloc::vec![BigInt::zero(); exponent as usize + 1];
            c[0] = BigInt::from(u);
            c[exponent as usize] = BigInt::one();
            (c, 1)
        }
        _ => unreachable!(),
    }
}

fn v2(x: &BigInt) -> Option<u64> {
    x.magnitude().trailing_zeros()
}

/// Coefficients of `y ↦ g(r + y)`.
fn taylor(g: &[BigInt], r: &BigInt) -> Vec<BigInt> {
    let mut c = g.to_vec();
    // Repeated synthetic division by (x - r).
    let n = c.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let t = &c[j + 1] * r;
            c[j] += t;
        }
    }
    c
}

const BALL_DEPTH: u64 = 64;

/// Valuations `v2(g(m))` attained by integers `m ≡ r (mod 2^a)`. A ball where
/// `g` has a simple root reachable by Hensel's lemma gives every value from
/// `v2(g'(r)) + a` on.
fn explore_ball(g: &[BigInt], r: BigInt, a: u64, adj: u64, out: &mut Profile) -> Result<(), Error> {
    let c = taylor(g, &r);
    let scaled = |i: usize| &c[i] << (a as usize * i);
    let v0 = v2(&c[0]);
    let mu = (1..c.len()).filter_map(|i| v2(&scaled(i))).min();
    if let Some(v) = v0 {
        if mu.map_or(true, |m| v < m) {
            out.add(v + adj);
            return Ok(());
        }
    }
    if let Some(d) = v2(&c[1]) {
        let hensel = match v0 {
            None => true,
            Some(v) => v > 2 * d && v - d >= a,
        };
        if hensel && a > d {
            out.add_from(d + a + adj);
            return Ok(());
        }
    }
    // g = m^e near 0: v2(g(m)) = e·v2(m) with v2(m) >= a.
    let deg = g.len() - 1;
    if r.is_zero() && deg >= 2 && g[..deg].iter().all(Zero::is_zero) {
        out.add_progression(deg as u64 * a + adj, deg as u64);
        return Ok(());
    }
    if a >= BALL_DEPTH {
        return Err(Error::Unsupported("boundary points near a multiple root"));
    }
    let step = BigInt::one() << a as usize;
    explore_ball(g, r.clone(), a + 1, adj, out)?;
    explore_ball(g, r + step, a + 1, adj, out)
}

/// Pieces met infinitely often by the points `k_m + u`, `m` in the index
/// set `z`, over a triangular or polynomial scheme.
fn zone_profile(scheme: IntervalScheme, u: i64, z: &Analysis) -> Result<Profile, Error> {
    let (g, adj) = zone_poly(scheme, u);
    let mut out = Profile::default();
    let periodic = |s: &EpSet, out: &mut Profile| -> Result<(), Error> {
        if !s.is_infinite() {
            return Ok(());
        }
        let a = u64::from(s.period().trailing_zeros());
        let classes: BTreeSet<u64> = s.tail_residues().into_iter().map(|r| r % (1 << a)).collect();
        for r in classes {
            explore_ball(&g, BigInt::from(r), a, adj, out)?;
        }
        Ok(())
    };
    match &z.kind {
        Kind::Periodic(s) => periodic(s, &mut out)?,
        Kind::Sparse(sp) => {
            periodic(&sp.g0, &mut out)?;
            let lam = sp.cycle_len;
            if !sp.hits.is_empty() && lam > 4096 {
                return Err(Error::Unsupported("level cycle too long"));
            }
            for &(j, level) in &sp.hits {
                let (b, t) = &sp.points[j];
                // m_L -> N / D 2-adically with D = 2^Λ - 1 odd, so v2(g(m_L))
                // settles at v2(D^deg g(N / D)).
                let mut w = BigInt::zero();
                for i in 1..=lam {
                    w = (w << 1usize) + u32::from(b.bit(level + i));
                }
                let d = (BigInt::one() << lam as usize) - 1u32;
                let n = BigInt::from(*t) * &d - w * sp.stride;
                let deg = g.len() - 1;
                let mut acc = BigInt::zero();
                let mut dpow = BigInt::one();
                let mut terms = Vec::with_capacity(deg + 1);
                for _ in 0..=deg {
                    terms.push(dpow.clone());
                    dpow *= &d;
                }
                let mut npow = BigInt::one();
                for (i, coef) in g.iter().enumerate() {
                    acc += coef * &npow * &terms[deg - i];
                    npow *= &n;
                }
                if let Some(v) = v2(&acc) {
                    out.add(v + adj);
                }
            }
        }
        Kind::Blocks(_) => return Err(Error::Unsupported("nested block index")),
    }
    Ok(out)
}

/// `k_m mod p` for `m >= m0`, as a head followed by a cycle.
fn boundary_orbit(s: IntervalScheme, m0: u64, p: u64) -> Result<(Vec<u64>, Vec<u64>), Error> {
    match s {
        IntervalScheme::Geometric { base, offset } => {
            let mut seen: BTreeMap<u64, usize> = BTreeMap::new();
            let mut seq = Vec::new();
            let mut x = pow_mod(base, m0, p);
            loop {
                if let Some(&i) = seen.get(&x) {
                    let cycle = seq.split_off(i);
                    return Ok((seq, cycle));
                }
                if seq.len() as u64 >= PERIOD_CAP {
                    return Err(Error::Unsupported("period too large"));
                }
                seen.insert(x, seq.len());
                seq.push(((x as u128 + offset as u128) % p as u128) as u64);
                x = ((x as u128 * base as u128) % p as u128) as u64;
            }
        }
        IntervalScheme::Polynomial { .. } | IntervalScheme::Triangular => {
            let len = if matches!(s, IntervalScheme::Triangular) { 2 * p } else { p };
            if len > PERIOD_CAP {
                return Err(Error::Unsupported("period too large"));
            }
            Ok((Vec::new(), (0..len).map(|i| s.boundary_mod(m0 + i, p)).collect()))
        }
        IntervalScheme::Linear { .. } => Err(Error::GapsBounded),
    }
}

pub(crate) struct Pattern {
    /// The set inside cores of blocks with this atom vector.
    pub(crate) g: EpSet,
    /// Blocks `m >= m0` with this atom vector, when `g` is non-empty.
    pub(crate) index: Option<Result<Analysis, Error>>,
    formula: Formula,
}

pub(crate) struct BlockForm {
    pub(crate) scheme: IntervalScheme,
    pub(crate) m0: u64,
    pub(crate) tlo: i64,
    pub(crate) thi: i64,
    pub(crate) patterns: Vec<Pattern>,
    /// `(u, Z_u)`: `m ∈ Z_u` iff `k_m + u` is a member, for `m >= m0`.
    pub(crate) zones: Vec<(i64, Result<Analysis, Error>, Formula)>,
    ictx: Ctx,
    depth: u32,
}

fn to_i128(x: &BigUint) -> i128 {
    x.to_i128().unwrap_or(i128::MAX)
}

impl BlockForm {
    fn build(ctx: &Ctx, f: &Formula, ids: &[usize], depth: u32) -> Result<BlockForm, Error> {
        let mut scheme = None;
        let mut idx = Vec::new();
        let mut shifts = Vec::new();
        for &i in ids {
            if let Atom::Block { scheme: s, index, shift } = &ctx.atoms[i] {
                if *scheme.get_or_insert(*s) != *s {
                    return Err(Error::Unsupported("blocks over different schemes"));
                }
                idx.push(index.clone());
                shifts.push(*shift);
            }
        }
        let scheme = scheme.unwrap();
        if !scheme.gaps_diverge() {
            return Err(Error::GapsBounded);
        }
        let j = ids.len();
        if j > MAX_BLOCK_ATOMS {
            return Err(Error::Unsupported("too many block atoms"));
        }
        let pats: Vec<EpSet> = (0..1usize << j)
            .map(|m| f.eval(&|i| m >> ids.binary_search(&i).unwrap() & 1 == 1))
            .collect::<Result<_, _>>()?;
        let thr = pats.iter().map(|g| g.threshold()).max().unwrap();
        let pmax = pats.iter().map(|g| g.period()).max().unwrap();
        let tlo = shifts.iter().copied().min().unwrap().min(0);
        let thi = shifts.iter().copied().max().unwrap().max(0);
        let w = (thi - tlo) as u64;
        if w > MAX_ZONE_WIDTH {
            return Err(Error::Unsupported("shifts too far apart"));
        }
        let mut m0 = (scheme.first_block_with_gap(w + pmax).ok_or(Error::GapsBounded)? + 1).max(2);
        while to_i128(&scheme.boundary(m0)) + (tlo as i128) < thr as i128 {
            m0 += 1;
        }

        let mut ictx = Ctx::default();
        let mut lit0 = Vec::new();
        let mut lit1 = Vec::new();
        for x in &idx {
            lit0.push(lower(&mut ictx, x, 0)?);
            lit1.push(lower(&mut ictx, &SetExpr::translate(x.clone(), 1), 0)?);
        }
        let from = Formula::ep(EpSet::from(m0));
        let vector = |v: usize, lits: &dyn Fn(usize) -> Formula| -> Result<Formula, Error> {
            let mut acc = from.clone();
            for q in 0..j {
                let l = lits(q);
                acc = Formula::and(acc, if v >> q & 1 == 1 { l } else { Formula::not(l) })?;
            }
            Ok(acc)
        };
        let mut patterns = Vec::new();
        for (v, g) in pats.iter().enumerate() {
            let formula = vector(v, &|q| lit0[q].clone())?;
            let index = (!g.is_empty()).then(|| Analysis::new(ictx.clone(), formula.clone(), depth + 1));
            patterns.push(Pattern {
                g: g.clone(),
                index,
                formula,
            });
        }
        let mut orbits: BTreeMap<u64, (Vec<u64>, Vec<u64>)> = BTreeMap::new();
        let mut zones = Vec::new();
        for u in tlo..thi {
            let mut z = Formula::ep(EpSet::empty());
            for (v, g) in pats.iter().enumerate() {
                if g.is_empty() {
                    continue;
                }
                let p = g.period();
                if !orbits.contains_key(&p) {
                    orbits.insert(p, boundary_orbit(scheme, m0, p)?);
                }
                let (head, cycle) = &orbits[&p];
                let bit = |x: &u64| g.tail().bit((*x as i128 + u as i128).rem_euclid(p as i128) as u64);
                let hb: Vec<bool> = head.iter().map(bit).collect();
                let cb: Vec<bool> = cycle.iter().map(bit).collect();
                let h = EpSet::eventually(m0, &hb, &cb)?;
                if h.is_empty() {
                    continue;
                }
                let lits = |q: usize| {
                    if u >= shifts[q] {
                        lit0[q].clone()
                    } else {
                        lit1[q].clone()
                    }
                };
                let term = Formula::and(Formula::ep(h), vector(v, &lits)?)?;
                z = Formula::or(z, term)?;
            }
            let a = Analysis::new(ictx.clone(), z.clone(), depth + 1);
            zones.push((u, a, z));
        }
        Ok(BlockForm {
            scheme,
            m0,
            tlo,
            thi,
            patterns,
            zones,
            ictx,
            depth,
        })
    }

    pub(crate) fn width(&self) -> u64 {
        (self.thi - self.tlo) as u64
    }

    /// Index analyses of the patterns that are non-empty, with `g` infinite.
    fn live(&self) -> impl Iterator<Item = (&EpSet, &Result<Analysis, Error>)> {
        self.patterns
            .iter()
            .filter(|p| p.g.is_infinite())
            .filter_map(|p| p.index.as_ref().map(|a| (&p.g, a)))
    }

    fn infinite_witness(&self) -> Result<Option<Witness>, Error> {
        let mut pending = None;
        for (g, a) in self.live() {
            match a.as_ref().map_err(Clone::clone).and_then(|a| Ok((a, a.infinite_witness()?))) {
                Ok((a, Some(pw))) => {
                    let r = g.tail_residues()[0];
                    return Ok(Some(Witness::BlockCores {
                        scheme: self.scheme,
                        pattern: a.expr(),
                        from: self.m0,
                        pad: self.thi as u64,
                        residue: r,
                        modulus: g.period(),
                        pattern_witness: Box::new(pw),
                    }));
                }
                Ok((_, None)) => {}
                Err(e) => pending = Some(e),
            }
        }
        for (u, z, _) in &self.zones {
            match z.as_ref().map_err(Clone::clone).and_then(|a| Ok((a, a.infinite_witness()?))) {
                Ok((a, Some(pw))) => {
                    return Ok(Some(Witness::Boundaries {
                        scheme: self.scheme,
                        pattern: a.expr(),
                        from: self.m0,
                        offset: *u,
                        pattern_witness: Box::new(pw),
                    }));
                }
                Ok((_, None)) => {}
                Err(e) => pending = Some(e),
            }
        }
        match pending {
            Some(e) => Err(e),
            None => Ok(None),
        }
    }

    fn upper_bound(&self) -> Result<BigUint, Error> {
        let tlo = BigInt::from(self.tlo);
        let start = BigInt::from(self.scheme.boundary(self.m0)) + &tlo;
        let mut b = start.to_biguint().unwrap_or_default();
        for (_, a) in self.live() {
            let a = a.as_ref().map_err(Clone::clone)?;
            let m = a.upper_bound()?.to_u64().ok_or(Error::Overflow)?;
            b = b.max(self.scheme.boundary(m.max(1)));
        }
        for (_, z, _) in &self.zones {
            let a = z.as_ref().map_err(Clone::clone)?;
            let m = a.upper_bound()?.to_u64().ok_or(Error::Overflow)?;
            b = b.max(self.scheme.boundary(m.max(1)) + self.thi as u64);
        }
        Ok(b)
    }

    fn banach(&self) -> Result<Rational, Error> {
        let mut best = Rational::zero();
        for (g, a) in self.live() {
            let d = g.density();
            if d > best && a.as_ref().map_err(Clone::clone)?.is_infinite()? {
                best = d;
            }
        }
        Ok(best)
    }

    fn exact_density(&self, kind: ClassicalKind) -> Result<Rational, Error> {
        if kind == ClassicalKind::Banach {
            return self.banach();
        }
        match self.scheme {
            IntervalScheme::Geometric { base, .. } => self.geometric_density(base, kind),
            _ => {
                let mut total = Rational::zero();
                for (g, a) in self.live() {
                    total += g.density() * a.as_ref().map_err(Clone::clone)?.weighted_density()?;
                }
                Ok(total)
            }
        }
    }

    /// Block `m` carries density `c(m)`; with `c` periodic of period `q`,
    /// `N(k_m)/k_m` tends to `R_φ = (b-1)/(1-b^-q) Σ_{i=1..q} c(φ-i) b^-i`
    /// along `m ≡ φ`, and the ratio is monotone inside each block.
    fn geometric_density(&self, base: u64, kind: ClassicalKind) -> Result<Rational, Error> {
        let mut parts = Vec::new();
        for (g, a) in self.live() {
            let a = a.as_ref().map_err(Clone::clone)?;
            match &a.kind {
                Kind::Periodic(s) => parts.push((g.density(), s.clone())),
                _ => return Err(Error::Unsupported("non-periodic block pattern")),
            }
        }
        if parts.is_empty() {
            return Ok(Rational::zero());
        }
        let mut q = 1u64;
        let mut t = 1u64;
        for (_, s) in &parts {
            q = q.lcm(&s.period());
            t = t.max(s.threshold());
            if q > MAX_DENSITY_PERIOD {
                return Err(Error::Unsupported("block pattern period too large"));
            }
        }
        let c: Vec<Rational> = (0..q)
            .map(|i| {
                parts
                    .iter()
                    .filter(|(_, s)| s.member(t + i))
                    .fold(Rational::zero(), |acc, (d, _)| acc + d)
            })
            .collect();
        if kind == ClassicalKind::Logarithmic {
            let sum = c.iter().fold(Rational::zero(), |a, x| a + x);
            return Ok(sum / BigInt::from(q));
        }
        let b = Rational::from_integer(BigInt::from(base));
        let binv = b.recip();
        let scale = (&b - Rational::one()) / (Rational::one() - pow(&binv, q));
        let mut best: Option<Rational> = None;
        for phi in 0..q {
            let mut s = Rational::zero();
            let mut w = Rational::one();
            for i in 1..=q {
                w = &w * &binv;
                s += &c[((q + phi - i % q) % q) as usize] * &w;
            }
            let r = &scale * s;
            best = Some(match best {
                None => r,
                Some(x) => match kind {
                    ClassicalKind::LowerAsymptotic => x.min(r),
                    _ => x.max(r),
                },
            });
        }
        Ok(best.unwrap())
    }

    fn positive_density(&self) -> Result<Option<Rational>, Error> {
        let mut pending = None;
        let mut total = Rational::zero();
        let geometric = match self.scheme {
            IntervalScheme::Geometric { base, .. } => Some(base),
            _ => None,
        };
        for (g, a) in self.live() {
            let a = match a {
                Ok(a) => a,
                Err(e) => {
                    pending = Some(e.clone());
                    continue;
                }
            };
            let got = match geometric {
                Some(b) => a.is_infinite().map(|inf| {
                    if inf {
                        g.density() * Rational::new(BigInt::from(b - 1), BigInt::from(b))
                    } else {
                        Rational::zero()
                    }
                }),
                None => a.weighted_density().map(|d| g.density() * d),
            };
            match got {
                Ok(x) if x > total => total = x,
                Ok(_) => {}
                Err(e) => pending = Some(e),
            }
        }
        if !total.is_zero() {
            return Ok(Some(total));
        }
        match pending {
            Some(e) => Err(e),
            None => Ok(None),
        }
    }

    fn piece_profile(&self) -> Result<Profile, Error> {
        let mut out = Profile::default();
        for (g, a) in self.live() {
            if a.as_ref().map_err(Clone::clone)?.is_infinite()? {
                out.merge(&periodic_profile(g));
            }
        }
        for (u, z, _) in &self.zones {
            if !z.as_ref().map_err(Clone::clone)?.is_infinite()? {
                continue;
            }
            match self.scheme {
                IntervalScheme::Geometric { base, offset } if base % 2 == 0 => {
                    // b^m -> 0 2-adically, so v2(k_m + u) settles at v2(c + u).
                    let c = offset as i128 + *u as i128;
                    if c != 0 {
                        out.add(u64::from(c.unsigned_abs().trailing_zeros()) + 1);
                    }
                }
                IntervalScheme::Triangular | IntervalScheme::Polynomial { .. } => {
                    let z = z.as_ref().map_err(Clone::clone)?;
                    out.merge(&zone_profile(self.scheme, *u, z)?);
                }
                _ => return Err(Error::Unsupported("boundary points over this scheme")),
            }
        }
        Ok(out)
    }

    /// `I_m ⊆ A` iff the core pattern is full and every zone point around
    /// block `m` is a member.
    fn contained(&self) -> Result<Analysis, Error> {
        let mut ctx = self.ictx.clone();
        let mut zones_here = Formula::ep(EpSet::full());
        for (u, _, z) in &self.zones {
            let f = if *u >= 0 { z.clone() } else { z.shifted(&mut ctx, -1)? };
            zones_here = Formula::and(zones_here, f)?;
        }
        let mut ci = Formula::ep(EpSet::empty());
        for p in &self.patterns {
            if !p.g.is_empty() && p.g.tail_full() {
                ci = Formula::or(ci, Formula::and(p.formula.clone(), zones_here.clone())?)?;
            }
        }
        Analysis::new(ctx, ci, self.depth + 1)
    }
}

fn pow(x: &Rational, n: u64) -> Rational {
    let mut r = Rational::one();
    for _ in 0..n {
        r = &r * x;
    }
    r
}

#[allow(dead_code)]
fn abs_i128(x: &BigInt) -> Option<u128> {
    x.abs().to_u128()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runs::for_each_run;
    use crate::Budget;
    use alloc::vec;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p.into(), q.into())
    }

    fn a_star() -> SetExpr {
        SetExpr::blocks(IntervalScheme::dyadic(), SetExpr::ap(2, 2).unwrap())
    }

    fn branch(s: &str) -> Branch {
        s.parse().unwrap()
    }

    /// Members above `lo` seen by enumeration, a finite-horizon proxy for
    /// infinitude on sets whose members are not astronomically sparse.
    fn members_between(e: &SetExpr, lo: u64, hi: u64) -> u64 {
        let mut c = 0;
        for_each_run(e, lo, hi, Budget::default(), |a, b, v| {
            if v {
                c += b - a + 1
            }
        })
        .unwrap();
        c
    }

    #[test]
    fn block_set_densities() {
        let a = analyze(&a_star()).unwrap();
        assert!(matches!(a.kind, Kind::Blocks(_)));
        assert_eq!(a.exact_density(ClassicalKind::Asymptotic).unwrap(), r(2, 3));
        assert_eq!(a.exact_density(ClassicalKind::LowerAsymptotic).unwrap(), r(1, 3));
        assert_eq!(a.exact_density(ClassicalKind::Logarithmic).unwrap(), r(1, 2));
        assert_eq!(a.exact_density(ClassicalKind::Banach).unwrap(), r(1, 1));
    }

    #[test]
    fn translates_keep_density() {
        for k in [-5i64, -1, 1, 3, 8] {
            let a = analyze(&SetExpr::translate(a_star(), k)).unwrap();
            assert_eq!(a.exact_density(ClassicalKind::Asymptotic).unwrap(), r(2, 3), "k = {k}");
            assert_eq!(a.exact_density(ClassicalKind::LowerAsymptotic).unwrap(), r(1, 3));
        }
    }

    #[test]
    fn shift_difference_is_finite_per_block_and_null() {
        for k in 1..=8i64 {
            let b = SetExpr::diff(SetExpr::translate(a_star(), k), a_star());
            let a = analyze(&b).unwrap();
            assert_eq!(a.positive_density().unwrap(), None);
            assert!(a.is_infinite().unwrap());
            assert_eq!(a.exact_density(ClassicalKind::Asymptotic).unwrap(), r(0, 1));
        }
    }

    #[test]
    fn sparse_hits_follow_membership() {
        let x = branch("0|1");
        let c = SetExpr::codes(x.clone(), 1).unwrap();
        let a = analyze(&c).unwrap();
        assert!(a.is_infinite().unwrap());
        // Shifted code points avoid the unshifted ones.
        let d = SetExpr::inter(c.clone(), SetExpr::translate(c.clone(), 1));
        assert!(!analyze(&d).unwrap().is_infinite().unwrap());
        // code(1^L) + 1 = 2^(L+1) = code(0^(L+1)).
        let ones = SetExpr::codes(branch("|1"), 1).unwrap();
        let zeros = SetExpr::codes(branch("|0"), 1).unwrap();
        let e = SetExpr::inter(SetExpr::translate(ones, 1), zeros);
        assert!(analyze(&e).unwrap().is_infinite().unwrap());
        assert!(members_between(&e, 100, 1 << 20) > 5);
        // Only even code points of 0|1: code(0 1^L) = 2^L + 2^{L-1} - 1 is odd.
        let f = SetExpr::inter(c, SetExpr::ap(2, 2).unwrap());
        assert!(!analyze(&f).unwrap().is_infinite().unwrap());
    }

    #[test]
    fn finite_bounds_cover_members() {
        let exprs = vec![
            SetExpr::finite(vec![3, 90]).unwrap(),
            SetExpr::inter(a_star(), SetExpr::translate(SetExpr::complement(a_star()), 0)),
            SetExpr::inter(SetExpr::codes(branch("0|1"), 1).unwrap(), SetExpr::ap(2, 2).unwrap()),
            SetExpr::blocks(IntervalScheme::Triangular, SetExpr::finite(vec![2, 7]).unwrap()),
        ];
        for e in &exprs {
            let a = analyze(e).unwrap();
            assert!(!a.is_infinite().unwrap(), "{e}");
            let b = a.upper_bound().unwrap().to_u64().unwrap();
            assert_eq!(members_between(e, b, b + 100_000), 0, "{e}");
        }
    }

    #[test]
    fn piece_profiles() {
        // Odd numbers form P_1.
        let odd = analyze(&SetExpr::ap(1, 2).unwrap()).unwrap();
        let p = odd.piece_profile().unwrap();
        assert!(p.contains(1) && !p.contains(2));
        // ap(4, 8) = 4·odd = P_3.
        let p3 = analyze(&SetExpr::ap(4, 8).unwrap()).unwrap().piece_profile().unwrap();
        assert_eq!(p3.weight(), r(1, 8));
        // Multiples of 4 meet every piece from 3 on.
        let m4 = analyze(&SetExpr::ap(4, 4).unwrap()).unwrap().piece_profile().unwrap();
        assert_eq!(m4.weight(), r(1, 4));
        // Block set: long blocks meet every piece.
        assert_eq!(analyze(&a_star()).unwrap().piece_profile().unwrap().weight(), r(1, 1));
        // {2^L}: one point per piece.
        let pw = analyze(&SetExpr::codes(branch("|0"), 1).unwrap()).unwrap();
        assert!(pw.piece_profile().unwrap().is_empty());
        // {2^L + 1}: all odd, P_1 only.
        let pw1 = analyze(&SetExpr::translate(SetExpr::codes(branch("|0"), 1).unwrap(), 1)).unwrap();
        assert_eq!(pw1.piece_profile().unwrap().weight(), r(1, 2));
        // Boundary points 2^m + 1 + 2 of geo(2,1) blocks: all odd.
        let z = SetExpr::diff(SetExpr::translate(a_star(), 3), a_star());
        let pz = analyze(&z).unwrap().piece_profile().unwrap();
        assert!(pz.contains(1));
    }

    #[test]
    fn contained_blocks_of_members() {
        let a = analyze(&a_star()).unwrap();
        let ci = a.contained_blocks(IntervalScheme::dyadic()).unwrap().unwrap();
        assert!(ci.is_infinite().unwrap());
        let x = branch("01|1");
        let c = SetExpr::blocks(IntervalScheme::Triangular, SetExpr::codes(x, 2).unwrap());
        let ci = analyze(&c).unwrap().contained_blocks(IntervalScheme::Triangular).unwrap().unwrap();
        assert!(ci.is_infinite().unwrap());
        let odd = analyze(&SetExpr::ap(1, 2).unwrap()).unwrap();
        assert!(odd.contained_blocks(IntervalScheme::dyadic()).unwrap().is_none());
    }

    #[test]
    fn polynomial_blocks() {
        let e = SetExpr::blocks(IntervalScheme::Triangular, SetExpr::ap(1, 3).unwrap());
        let a = analyze(&e).unwrap();
        assert_eq!(a.exact_density(ClassicalKind::Asymptotic).unwrap(), r(1, 3));
        assert_eq!(a.exact_density(ClassicalKind::Banach).unwrap(), r(1, 1));
        let c = SetExpr::blocks(IntervalScheme::polynomial(2).unwrap(), SetExpr::codes(branch("|0"), 2).unwrap());
        let a = analyze(&c).unwrap();
        assert_eq!(a.exact_density(ClassicalKind::Asymptotic).unwrap(), r(0, 1));
        assert!(a.is_infinite().unwrap());
    }
}
