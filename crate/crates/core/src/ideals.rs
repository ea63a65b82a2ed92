//! Membership in concrete ideals on ℕ, with certificates that can be
//! re-checked from membership, prefix counts and interval bounds alone.

use alloc::boxed::Box;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::count::prefix_count_with;
use crate::runs::for_each_run;
use crate::shape::{analyze, dyadic, Analysis, Kind};
use crate::span::{classify_span, member_big};
use crate::{Branch, Budget, Error, IntervalScheme, Rational, SetExpr, Span};

/// Weight `f` of a summable ideal `{A : Σ_{n∈A} f(n) < ∞}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Weight {
    /// `f(n) = 1/n`.
    Harmonic,
    /// `f(n) = n^-p` with `0 < p <= 1`.
    PowerLaw(Rational),
}

impl Weight {
    pub fn power_law(p: Rational) -> Result<Self, Error> {
        if p <= Rational::zero() || p > Rational::one() {
            return Err(Error::Range("power-law exponent must lie in (0, 1]"));
        }
        Ok(Weight::PowerLaw(p))
    }

    pub fn exponent(&self) -> Rational {
        match self {
            Weight::Harmonic => Rational::one(),
            Weight::PowerLaw(p) => p.clone(),
        }
    }
}

/// A partition of ℕ into infinitely many infinite pieces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partition {
    /// `P_n = 2^(n-1)·(odd numbers) = ap(2^(n-1), 2^n)`.
    Dyadic,
}

impl Partition {
    pub const MAX_PIECE: u64 = 62;

    pub fn piece(&self, n: u64) -> Result<SetExpr, Error> {
        if n == 0 || n > Self::MAX_PIECE {
            return Err(Error::Range("piece index must lie in 1..=62"));
        }
        SetExpr::ap(1 << (n - 1), 1 << n)
    }

    /// Index of the piece containing `m >= 1`.
    pub fn piece_of(&self, m: u64) -> u64 {
        u64::from(m.trailing_zeros()) + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdealOracle {
    Fin,
    /// Sets of asymptotic density zero.
    DensityZero,
    Summable(Weight),
    /// `{A : A ∩ P_n finite for every n}`.
    PieceFinite(Partition),
}

/// Finite evidence that a set is infinite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// `a + i·d` is a member for every `i >= 0`, except for at most
    /// `exceptions` values of `i` with `a + i·d` in any one range `[2^j, 2^(j+1))`.
    Progression { a: u64, d: u64, exceptions: u64 },
    /// For every `m >= from` in `pattern`, the least `n >= k_m + pad` with
    /// `n ≡ residue (mod modulus)` is a member.
    BlockCores {
        scheme: IntervalScheme,
        pattern: SetExpr,
        from: u64,
        pad: u64,
        residue: u64,
        modulus: u64,
        pattern_witness: Box<Witness>,
    },
    /// `k_m + offset` is a member for every `m >= from` in `pattern`.
    Boundaries {
        scheme: IntervalScheme,
        pattern: SetExpr,
        from: u64,
        offset: i64,
        pattern_witness: Box<Witness>,
    },
    /// `stride·code(x↾L) + shift` is a member for `L = from_level + i·step`.
    CodePoints {
        branch: Branch,
        stride: u64,
        shift: i64,
        from_level: u64,
        step: u64,
    },
}

/// Lower bound for one block of a divergence certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockBound {
    pub block: u64,
    pub count: u64,
    /// `count / max`, where `max` is the largest element of the block.
    pub bound: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DivergentTail {
    /// Every pattern block `m >= from` contributes at least `floor`.
    Uniform { from: u64, floor: Rational },
    /// Every pattern block `m >= from` contributes at least `coeff / m`,
    /// and the pattern has natural density at least `pattern_density > 0`.
    Reciprocal {
        from: u64,
        coeff: Rational,
        pattern_density: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConvergentTail {
    /// Beyond the cutoff every member is a code point `stride·c + t` of
    /// level `L >= from_level`, at most `per_level` of them per level, and
    /// each is at least `stride·2^(L-1)`.
    CodeLevels {
        stride: u64,
        from_level: u64,
        per_level: u64,
    },
    /// Beyond the cutoff the members lie within `per_block` positions
    /// `k_m + u` with `u >= offset`, for boundaries `m >= from`.
    Boundaries {
        scheme: IntervalScheme,
        from: u64,
        per_block: u64,
        offset: i64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Every member is below `bound`; `max` and `count` when computed.
    Boundedness {
        bound: BigUint,
        max: Option<u64>,
        count: Option<u64>,
    },
    Infinite(Witness),
    /// The weighted sum over the blocks of `pattern` diverges.
    Divergence {
        scheme: IntervalScheme,
        pattern: SetExpr,
        blocks: Vec<BlockBound>,
        running_sum: Rational,
        tail: DivergentTail,
    },
    /// Weighted sum below `cutoff` is at most `head_sum_upper`; above it the
    /// tail is dominated as described, by at most `tail_upper` when given.
    Convergence {
        cutoff: BigUint,
        head_sum_upper: Rational,
        tail: ConvergentTail,
        tail_upper: Option<Rational>,
    },
    /// Finiteness of the intersection with each listed piece; when
    /// `rest_finite` every unlisted piece meets the set finitely.
    ComponentTable {
        rows: Vec<ComponentRow>,
        rest_finite: bool,
    },
    /// Every `I_m` with `m >= from` in `pattern` is contained in the set.
    IntervalPattern {
        scheme: IntervalScheme,
        pattern: SetExpr,
        from: u64,
        witness: Box<Witness>,
    },
    /// Upper asymptotic density at least `lower > 0`.
    PositiveDensity { lower: Rational, witness: Option<Witness> },
    /// Beyond block `from`, every block outside `sparse_blocks` holds at
    /// most `per_block` members, and `sparse_blocks` (block indices) has
    /// density zero even when weighted by block length.
    ZeroDensity {
        scheme: IntervalScheme,
        from: u64,
        per_block: u64,
        sparse_blocks: Option<SetExpr>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentRow {
    pub piece: u64,
    pub finite: bool,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    Budget { limit: u64 },
    Unsupported(&'static str),
    /// `contained` of the first `probed` scheme intervals lie in the set.
    Inconclusive { contained: u64, probed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    In(Certificate),
    NotIn(Certificate),
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn is_in(&self) -> bool {
        matches!(self, Verdict::In(_))
    }

    pub fn is_not_in(&self) -> bool {
        matches!(self, Verdict::NotIn(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown(_))
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::In(c) | Verdict::NotIn(c) => Some(c),
            Verdict::Unknown(_) => None,
        }
    }

    pub(crate) fn from_error(e: Error) -> Verdict {
        Verdict::Unknown(match e {
            Error::Budget { limit } => UnknownReason::Budget { limit },
            Error::Unsupported(w) => UnknownReason::Unsupported(w),
            Error::GapsBounded => UnknownReason::Unsupported("scheme gaps do not diverge"),
            Error::Overflow => UnknownReason::Unsupported("numbers out of range"),
            _ => UnknownReason::Unsupported("outside the decidable fragment"),
        })
    }
}

pub fn ideal_member(ideal: &IdealOracle, e: &SetExpr, budget: Budget) -> Verdict {
    decide(ideal, e, budget).unwrap_or_else(Verdict::from_error)
}

fn decide(ideal: &IdealOracle, e: &SetExpr, budget: Budget) -> Result<Verdict, Error> {
    let a = analyze(e)?;
    match ideal {
        IdealOracle::Fin => match a.infinite_witness()? {
            Some(w) => Ok(Verdict::NotIn(Certificate::Infinite(w))),
            None => Ok(Verdict::In(bounded(e, &a, budget)?)),
        },
        IdealOracle::DensityZero => match a.positive_density()? {
            Some(lower) => Ok(Verdict::NotIn(Certificate::PositiveDensity {
                lower,
                witness: a.infinite_witness()?,
            })),
            None => {
                if a.is_infinite()? {
                    Ok(Verdict::In(zero_density(&a)?))
                } else {
                    Ok(Verdict::In(bounded(e, &a, budget)?))
                }
            }
        },
        IdealOracle::Summable(w) => summable(e, &a, &w.exponent(), budget),
        IdealOracle::PieceFinite(part) => piece_finite(*part, e, &a),
    }
}

fn bounded(e: &SetExpr, a: &Analysis, budget: Budget) -> Result<Certificate, Error> {
    let bound = a.upper_bound()?;
    let Some(b) = bound.to_u64() else {
        return Ok(Certificate::Boundedness {
            bound,
            max: None,
            count: None,
        });
    };
    let top = b.saturating_sub(1);
    let total = prefix_count_with(e, top, budget)?;
    if total == 0 {
        return Ok(Certificate::Boundedness {
            bound,
            max: None,
            count: Some(0),
        });
    }
    // Least n with |e ∩ [1, n]| = total.
    let (mut lo, mut hi) = (1u64, top);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if prefix_count_with(e, mid, budget)? == total {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(Certificate::Boundedness {
        bound,
        max: Some(lo),
        count: Some(total),
    })
}

fn octaves() -> IntervalScheme {
    IntervalScheme::Geometric { base: 2, offset: 0 }
}

fn zero_density(a: &Analysis) -> Result<Certificate, Error> {
    match &a.kind {
        Kind::Periodic(_) => Err(Error::InvalidValue("infinite periodic set has positive density")),
        Kind::Sparse(sp) => {
            let tmax = sp.points.iter().map(|p| p.1.unsigned_abs()).max().unwrap_or(0);
            let lim = sp.g0.threshold().max(4 * tmax + 4).max(sp.stride << sp.cycle_start.min(40));
            Ok(Certificate::ZeroDensity {
                scheme: octaves(),
                from: 64 - u64::from(lim.leading_zeros()) + 1,
                per_block: 3 * sp.points.len() as u64,
                sparse_blocks: None,
            })
        }
        Kind::Blocks(b) => {
            let mut from = b.m0;
            let mut sparse = Vec::new();
            for p in &b.patterns {
                let Some(ix) = &p.index else { continue };
                if !p.g.is_infinite() {
                    continue;
                }
                let ix = ix.as_ref().map_err(Clone::clone)?;
                if ix.is_infinite()? {
                    sparse.push(ix.expr());
                } else {
                    from = from.max(ix.upper_bound()?.to_u64().ok_or(Error::Overflow)?);
                }
            }
            Ok(Certificate::ZeroDensity {
                scheme: b.scheme,
                from,
                per_block: b.width(),
                sparse_blocks: (!sparse.is_empty()).then(|| SetExpr::union_all(sparse)),
            })
        }
    }
}

/// Upper bound for `n^-p`, as `1 / floor(n^p)`.
fn weight_upper(n: u64, p: &Rational) -> Rational {
    if p.is_one() {
        return Rational::new(BigInt::one(), BigInt::from(n));
    }
    let a = p.numer().to_u32().unwrap();
    let b = p.denom().to_u32().unwrap();
    let root = BigUint::from(n).pow(a).nth_root(b).max(BigUint::one());
    Rational::new(BigInt::one(), BigInt::from(root))
}

const FIXED_BITS: usize = 64;

/// Fixed-point upper bound of `Σ_{n ∈ e, n < cutoff} n^-p`.
fn head_sum(e: &SetExpr, cutoff: u64, p: &Rational, budget: Budget) -> Result<Rational, Error> {
    let scale = BigInt::one() << FIXED_BITS;
    let mut acc = BigInt::zero();
    let mut seen = 0u64;
    let mut over = false;
    if cutoff > 1 {
        for_each_run(e, 1, cutoff - 1, budget, |a, b, v| {
            if !v || over {
                return;
            }
            seen += b - a + 1;
            if seen > budget.elements {
                over = true;
                return;
            }
            for n in a..=b {
                let w = weight_upper(n, p);
                // ceil(scale * w)
                let num = &scale * w.numer();
                let q = (&num + w.denom() - 1u32) / w.denom();
                acc += q;
            }
        })?;
    }
    if over {
        return Err(Error::Budget {
            limit: budget.elements,
        });
    }
    Ok(Rational::new(acc, scale))
}

fn divergence_blocks<I: IntoIterator<Item = u64>>(
    e: &SetExpr,
    scheme: IntervalScheme,
    blocks: I,
    budget: Budget,
) -> Result<(Vec<BlockBound>, Rational), Error> {
    let mut out = Vec::new();
    let mut sum = Rational::zero();
    for m in blocks {
        let (Some(lo), Some(hi)) = (scheme.boundary_u64(m), scheme.boundary_u64(m + 1)) else {
            break;
        };
        let count = prefix_count_with(e, hi - 1, budget)? - prefix_count_with(e, lo - 1, budget)?;
        let bound = Rational::new(count.into(), (hi - 1).into());
        sum += &bound;
        out.push(BlockBound { block: m, count, bound });
    }
    Ok((out, sum))
}

/// First `count` members `>= from` of an index set.
fn first_members(pattern: &SetExpr, from: u64, count: usize, budget: Budget) -> Result<Vec<u64>, Error> {
    let mut out = Vec::new();
    let mut lo = from;
    while out.len() < count && lo < u64::MAX / 2 {
        let hi = lo.saturating_mul(2).max(lo + 64);
        let mut stop = false;
        for_each_run(pattern, lo, hi, budget, |a, b, v| {
            if v && !stop {
                for m in a..=b {
                    out.push(m);
                    if out.len() >= count {
                        stop = true;
                        break;
                    }
                }
            }
        })?;
        lo = hi + 1;
        if hi > 1 << 40 {
            break;
        }
    }
    Ok(out)
}

const LISTED_BLOCKS: usize = 8;

fn summable(e: &SetExpr, a: &Analysis, p: &Rational, budget: Budget) -> Result<Verdict, Error> {
    match &a.kind {
        Kind::Periodic(s) if !s.is_infinite() => Ok(Verdict::In(bounded(e, a, budget)?)),
        Kind::Periodic(s) => octave_divergence(e, s, 0, budget).map(Verdict::NotIn),
        Kind::Sparse(sp) if sp.g0.is_infinite() => {
            octave_divergence(e, &sp.g0, 3 * sp.points.len() as u64, budget).map(Verdict::NotIn)
        }
        Kind::Sparse(sp) => {
            let j = sp.points.len() as u64;
            let s = sp.stride;
            let tmin = sp.points.iter().map(|x| x.1).min().unwrap();
            let tmax = sp.points.iter().map(|x| x.1).max().unwrap().max(0) as u64;
            let mut lc = 2u64;
            while (s as i128) << (lc - 1) < -(tmin as i128) || ((s as i128) << lc) + (tmin as i128) < sp.g0.threshold() as i128 {
                lc += 1;
            }
            let cutoff = (s << lc) + tmax + 1;
            let cutoff = cutoff.max(sp.g0.threshold());
            let head = head_sum(e, cutoff, p, budget)?;
            let tail_upper = p.is_one().then(|| {
                // Σ_{L >= lc} j / (s 2^(L-1)) = 2j / (s 2^(lc-1))
                Rational::new(BigInt::from(2 * j), BigInt::from(s) << (lc - 1) as usize)
            });
            Ok(Verdict::In(Certificate::Convergence {
                cutoff: BigUint::from(cutoff),
                head_sum_upper: head,
                tail: ConvergentTail::CodeLevels {
                    stride: s,
                    from_level: lc,
                    per_level: j,
                },
                tail_upper,
            }))
        }
        Kind::Blocks(b) => block_series(e, b, p, budget),
    }
}

/// Divergence against the octaves `[2^m, 2^(m+1))`: a periodic pattern of
/// `ones` residues mod `P` puts at least `ones·2^m/(2P)` members into each
/// late octave, each at most `2^(m+1)`.
fn octave_divergence(e: &SetExpr, g: &crate::EpSet, exceptions: u64, budget: Budget) -> Result<Certificate, Error> {
    let pp = g.period();
    let ones = g.tail_residues().len() as u64;
    let need = g.threshold().max(2 * pp * (1 + exceptions));
    let from = 64 - u64::from(need.leading_zeros());
    let scheme = octaves();
    let (blocks, running_sum) = divergence_blocks(e, scheme, from..from + LISTED_BLOCKS as u64, budget)?;
    Ok(Certificate::Divergence {
        scheme,
        pattern: SetExpr::ap(from, 1).unwrap(),
        blocks,
        running_sum,
        tail: DivergentTail::Uniform {
            from,
            floor: Rational::new(ones.into(), (4 * pp).into()),
        },
    })
}

fn block_series(e: &SetExpr, b: &crate::shape::BlockForm, p: &Rational, budget: Budget) -> Result<Verdict, Error> {
    let w = b.width();
    let mut from = b.m0;
    let mut sparse_cores = false;
    for pat in &b.patterns {
        let Some(ix) = &pat.index else { continue };
        if !pat.g.is_infinite() {
            continue;
        }
        let ix = ix.as_ref().map_err(Clone::clone)?;
        if !ix.is_infinite()? {
            from = from.max(ix.upper_bound()?.to_u64().ok_or(Error::Overflow)?);
            continue;
        }
        let density = pat.g.density();
        let ones = BigInt::from(pat.g.tail_residues().len() as u64);
        let full = pat.g.tail_full();
        match b.scheme {
            IntervalScheme::Geometric { base, offset } => {
                // count_m >= ρ(|I_m| - w) - ones (exact when the pattern is full),
                // and the resulting bound increases with m.
                let h = |m: u64| -> Option<Rational> {
                    let gap = BigInt::from(b.scheme.gap(m));
                    let top = BigInt::from(b.scheme.boundary(m + 1)) - 1u32;
                    let mut num = &density * Rational::from_integer(gap - BigInt::from(w));
                    if !full {
                        num -= Rational::from_integer(ones.clone());
                    }
                    let r = num / Rational::from_integer(top);
                    r.is_positive().then_some(r)
                };
                let pattern = ix.expr();
                let mut start = b.m0;
                while h(start).is_none() {
                    start += 1;
                }
                let listed = first_members(&pattern, start, LISTED_BLOCKS, budget)?;
                let (blocks, running_sum) = divergence_blocks(e, b.scheme, listed, budget)?;
                let mut floor = h(start).unwrap();
                if full && offset == 0 && w == 0 {
                    floor = Rational::new(BigInt::from(base - 1), BigInt::from(base));
                }
                return Ok(Verdict::NotIn(Certificate::Divergence {
                    scheme: b.scheme,
                    pattern,
                    blocks,
                    running_sum,
                    tail: DivergentTail::Uniform { from: start, floor },
                }));
            }
            _ => {
                let part = ix.periodic_part().cloned();
                match part {
                    Some(g0) if g0.is_infinite() => {
                        let pp = pat.g.period();
                        let start = b.scheme.first_block_with_gap(2 * (w + pp)).unwrap().max(b.m0);
                        let coeff = match b.scheme {
                            IntervalScheme::Triangular => &density / BigInt::from(6),
                            IntervalScheme::Polynomial { exponent } => &density / (BigInt::one() << (exponent + 1) as usize),
                            _ => unreachable!(),
                        };
                        let pattern = ix.expr();
                        let listed = first_members(&pattern, start, LISTED_BLOCKS, budget)?;
                        let (blocks, running_sum) = divergence_blocks(e, b.scheme, listed, budget)?;
                        return Ok(Verdict::NotIn(Certificate::Divergence {
                            scheme: b.scheme,
                            pattern,
                            blocks,
                            running_sum,
                            tail: DivergentTail::Reciprocal {
                                from: start,
                                coeff,
                                pattern_density: g0.density(),
                            },
                        }));
                    }
                    _ => sparse_cores = true,
                }
            }
        }
    }
    if sparse_cores {
        return Err(Error::Unsupported("whole blocks at sparse indices of a polynomial scheme"));
    }
    // Only boundary zones remain beyond block `from`.
    let mut active = 0u64;
    for (_, z, _) in &b.zones {
        let z = z.as_ref().map_err(Clone::clone)?;
        if z.is_infinite()? {
            active += 1;
        } else {
            from = from.max(z.upper_bound()?.to_u64().ok_or(Error::Overflow)?);
        }
    }
    if active == 0 {
        let a = analyze(e)?;
        if !a.is_infinite()? {
            return Ok(Verdict::In(bounded(e, &a, budget)?));
        }
    }
    let degree = b.scheme.poly_degree();
    if let Some(d) = degree {
        if active > 0 && p * Rational::from_integer(d.into()) <= Rational::one() {
            return Err(Error::Unsupported("boundary points with a slowly decaying weight"));
        }
    }
    let tlo = b.tlo;
    let c_plus = match b.scheme {
        IntervalScheme::Geometric { offset, .. } => offset as i128 + tlo as i128,
        _ => tlo as i128,
    };
    // k_m + tlo >= k_m / 2 for the tail bound.
    while (to_i128(&b.scheme.boundary(from))) < -2 * c_plus.min(0) + 2 {
        from += 1;
    }
    let cutoff_i = BigInt::from(b.scheme.boundary(from)) + tlo;
    let cutoff = cutoff_i.to_u64().ok_or(Error::Overflow)?;
    let head = head_sum(e, cutoff, p, budget)?;
    let tail_upper = if p.is_one() {
        let two_w = BigInt::from(2 * active.max(1) * w.max(1));
        match b.scheme {
            IntervalScheme::Geometric { base, .. } => {
                // Σ_{m>=from} 2w / b^m = 2w b / ((b-1) b^from)
                let den = (BigInt::from(base) - 1) * BigInt::from(base).pow(from as u32 - 1);
                Some(Rational::new(two_w, den))
            }
            IntervalScheme::Triangular => Some(Rational::new(two_w * 2, BigInt::from(from))),
            IntervalScheme::Polynomial { exponent } => {
                let den = BigInt::from(exponent - 1) * BigInt::from(from - 1).pow(exponent - 1);
                Some(Rational::new(two_w, den))
            }
            _ => None,
        }
    } else {
        None
    };
    Ok(Verdict::In(Certificate::Convergence {
        cutoff: BigUint::from(cutoff),
        head_sum_upper: head,
        tail: ConvergentTail::Boundaries {
            scheme: b.scheme,
            from,
            per_block: active * w.max(1),
            offset: tlo,
        },
        tail_upper,
    }))
}

fn to_i128(x: &BigUint) -> i128 {
    x.to_i128().unwrap_or(i128::MAX)
}

const TABLE_ROWS: u64 = 8;

fn piece_finite(part: Partition, e: &SetExpr, a: &Analysis) -> Result<Verdict, Error> {
    let profile = a.piece_profile()?;
    if profile.is_empty() {
        let rows = (1..=TABLE_ROWS)
            .map(|n| ComponentRow {
                piece: n,
                finite: true,
                witness: None,
            })
            .collect();
        return Ok(Verdict::In(Certificate::ComponentTable { rows, rest_finite: true }));
    }
    let n = profile.min().unwrap();
    let witness = if n <= 22 {
        analyze(&SetExpr::inter(e.clone(), part.piece(n)?))?.infinite_witness()?
    } else {
        None
    };
    Ok(Verdict::NotIn(Certificate::ComponentTable {
        rows: alloc::vec![ComponentRow {
            piece: n,
            finite: false,
            witness,
        }],
        rest_finite: false,
    }))
}

/// Positivity through contained scheme intervals: `NotIn` (the set is
/// positive for every ideal whose positive sets include all sets holding
/// infinitely many intervals of `scheme`) with an [`Certificate::IntervalPattern`],
/// or `Unknown` with the count of contained intervals among the first
/// `probe`.
pub fn talagrand_positive(scheme: IntervalScheme, e: &SetExpr, probe: u64) -> Verdict {
    if let Ok(a) = analyze(e) {
        if let Ok(Some(ci)) = a.contained_blocks(scheme) {
            if let Ok(Some(w)) = ci.infinite_witness() {
                let from = match &ci.kind {
                    Kind::Periodic(s) => s.threshold(),
                    _ => 1,
                };
                return Verdict::NotIn(Certificate::IntervalPattern {
                    scheme,
                    pattern: ci.expr(),
                    from,
                    witness: Box::new(w),
                });
            }
        }
    }
    let mut contained = 0;
    for m in 1..=probe {
        let Ok((lo, hi)) = scheme.interval_of(m) else { break };
        if classify_span(e, &lo, &hi) == Ok(Span::In) {
            contained += 1;
        }
    }
    Verdict::Unknown(UnknownReason::Inconclusive {
        contained,
        probed: probe,
    })
}

const SAMPLES: usize = 6;
const NESTED_SAMPLES: usize = 3;
const SAMPLE_INDEX_CAP: u64 = 1 << 14;

/// Points a witness asserts to be members, as `(point, may_be_exception)`.
pub(crate) fn witness_points(w: &Witness, count: usize) -> Vec<BigUint> {
    fn indices(w: &Witness, count: usize) -> Vec<u64> {
        witness_points(w, count)
            .into_iter()
            .filter_map(|x| x.to_u64())
            .filter(|&m| m <= SAMPLE_INDEX_CAP)
            .collect()
    }
    match w {
        Witness::Progression { a, d, .. } => (0..count as u64).map(|i| BigUint::from(*a) + BigUint::from(*d) * i).collect(),
        Witness::CodePoints {
            branch,
            stride,
            shift,
            from_level,
            step,
        } => (0..count as u64)
            .filter_map(|i| {
                let l = from_level + i * step;
                (l <= 4096).then(|| BigInt::from(branch.code_big(l) * *stride) + *shift)
            })
            .filter_map(|x| x.to_biguint())
            .collect(),
        Witness::BlockCores {
            scheme,
            from,
            pad,
            residue,
            modulus,
            pattern_witness,
            ..
        } => indices(pattern_witness, NESTED_SAMPLES.max(count.min(NESTED_SAMPLES)))
            .into_iter()
            .filter(|m| m >= from)
            .map(|m| {
                let n = scheme.boundary(m) + *pad;
                let r = (&n % *modulus).to_u64().unwrap();
                n + (residue + modulus - r) % modulus
            })
            .collect(),
        Witness::Boundaries {
            scheme,
            from,
            offset,
            pattern_witness,
            ..
        } => indices(pattern_witness, NESTED_SAMPLES)
            .into_iter()
            .filter(|m| m >= from)
            .filter_map(|m| (BigInt::from(scheme.boundary(m)) + *offset).to_biguint())
            .collect(),
    }
}

fn check_witness(e: &SetExpr, w: &Witness) -> Result<(), &'static str> {
    let pts = witness_points(w, SAMPLES * 4);
    if pts.is_empty() {
        return Err("witness yields no sample points");
    }
    let mut misses = 0u64;
    for p in &pts {
        if !member_big(e, p).map_err(|_| "sample point not decidable")? {
            misses += 1;
        }
    }
    let allowed = match w {
        Witness::Progression { exceptions, a, d, .. } => {
            let last = BigUint::from(*a) + BigUint::from(*d) * (pts.len() as u64);
            exceptions * (last.bits() + 1)
        }
        _ => 0,
    };
    if misses > allowed {
        return Err("witness point is not a member");
    }
    Ok(())
}

/// Independent re-check of a verdict's certificate, using membership,
/// prefix counts and interval bounds.
pub fn recheck(ideal: &IdealOracle, e: &SetExpr, v: &Verdict) -> Result<(), &'static str> {
    let budget = Budget::default();
    let cert = match v {
        Verdict::Unknown(_) => return Ok(()),
        Verdict::In(c) | Verdict::NotIn(c) => c,
    };
    let expect_in = v.is_in();
    match cert {
        Certificate::Boundedness { bound, max, count } => {
            if !expect_in {
                return Err("boundedness proves membership");
            }
            if let Some(m) = max {
                if !e.member(*m) {
                    return Err("claimed maximum is not a member");
                }
            }
            if let (Some(c), Some(b)) = (count, bound.to_u64()) {
                let probe = b.saturating_mul(4).saturating_add(1000);
                let later = prefix_count_with(e, probe, budget).map_err(|_| "count failed")?;
                if later != *c {
                    return Err("members beyond the bound");
                }
                if let Some(m) = max {
                    if prefix_count_with(e, *m, budget).map_err(|_| "count failed")? != *c {
                        return Err("members beyond the claimed maximum");
                    }
                }
            }
            Ok(())
        }
        Certificate::Infinite(w) => {
            if expect_in || *ideal != IdealOracle::Fin {
                return Err("infinitude refutes finiteness only");
            }
            check_witness(e, w)
        }
        Certificate::Divergence {
            scheme,
            blocks,
            running_sum,
            tail,
            pattern,
        } => {
            let mut sum = Rational::zero();
            for bb in blocks {
                if !pattern.member(bb.block) {
                    return Err("listed block outside the pattern");
                }
                let (lo, hi) = (scheme.boundary_u64(bb.block), scheme.boundary_u64(bb.block + 1));
                let (Some(lo), Some(hi)) = (lo, hi) else { return Err("block out of range") };
                let c = prefix_count_with(e, hi - 1, budget).map_err(|_| "count failed")?
                    - prefix_count_with(e, lo - 1, budget).map_err(|_| "count failed")?;
                if c != bb.count || bb.bound != Rational::new(c.into(), (hi - 1).into()) {
                    return Err("block bound does not match the count");
                }
                let (from, floor) = match tail {
                    DivergentTail::Uniform { from, floor } => (*from, floor.clone()),
                    DivergentTail::Reciprocal { from, coeff, .. } => (*from, coeff / BigInt::from(bb.block)),
                };
                if bb.block >= from && bb.bound < floor {
                    return Err("block below the claimed floor");
                }
                sum += &bb.bound;
            }
            if sum != *running_sum {
                return Err("running sum mismatch");
            }
            Ok(())
        }
        Certificate::Convergence {
            cutoff,
            head_sum_upper,
            tail,
            ..
        } => {
            let c = cutoff.to_u64().ok_or("cutoff out of range")?;
            let p = match ideal {
                IdealOracle::Summable(w) => w.exponent(),
                _ => return Err("convergence applies to summable ideals"),
            };
            let head = head_sum(e, c, &p, budget).map_err(|_| "head sum failed")?;
            if head > *head_sum_upper {
                return Err("head sum exceeds its bound");
            }
            match tail {
                ConvergentTail::Boundaries {
                    scheme,
                    from,
                    per_block,
                    offset,
                } => {
                    for m in *from..*from + 4 {
                        let (Some(lo), Some(hi)) = (scheme.boundary_u64(m), scheme.boundary_u64(m + 1)) else {
                            break;
                        };
                        let lo = (lo as i128 + *offset as i128).max(1) as u64;
                        let hi = (hi as i128 + *offset as i128).max(1) as u64;
                        if hi <= lo {
                            continue;
                        }
                        let n = prefix_count_with(e, hi - 1, budget).map_err(|_| "count failed")?
                            - prefix_count_with(e, lo - 1, budget).map_err(|_| "count failed")?;
                        if n > *per_block {
                            return Err("block holds more members than claimed");
                        }
                    }
                }
                ConvergentTail::CodeLevels { per_level, .. } => {
                    for i in 0..8u64 {
                        let lo = c.saturating_mul(1 << i);
                        let hi = lo.saturating_mul(2);
                        if hi == u64::MAX {
                            break;
                        }
                        let n = prefix_count_with(e, hi - 1, budget).map_err(|_| "count failed")?
                            - prefix_count_with(e, lo - 1, budget).map_err(|_| "count failed")?;
                        if n > 3 * per_level {
                            return Err("octave holds more code points than claimed");
                        }
                    }
                }
            }
            Ok(())
        }
        Certificate::ComponentTable { rows, rest_finite } => {
            if *rest_finite != expect_in {
                return Err("table does not match the verdict");
            }
            for r in rows {
                if let Some(w) = &r.witness {
                    let piece = Partition::Dyadic.piece(r.piece).map_err(|_| "bad piece")?;
                    check_witness(&SetExpr::inter(e.clone(), piece), w)?;
                }
                if r.finite != expect_in {
                    return Err("row contradicts the verdict");
                }
            }
            Ok(())
        }
        Certificate::IntervalPattern {
            scheme,
            from,
            witness,
            pattern,
        } => {
            let ms: Vec<u64> = witness_points(witness, SAMPLES)
                .into_iter()
                .filter_map(|x| x.to_u64())
                .filter(|m| m >= from)
                .collect();
            if ms.is_empty() {
                return Err("pattern witness yields no intervals");
            }
            for m in ms {
                if !pattern.member(m) {
                    return Err("pattern witness outside the pattern");
                }
                let (lo, hi) = scheme.interval_of(m).map_err(|_| "bad interval")?;
                if classify_span(e, &lo, &hi) != Ok(Span::In) {
                    return Err("interval not contained");
                }
            }
            Ok(())
        }
        Certificate::PositiveDensity { lower, witness } => {
            if expect_in {
                return Err("positive density refutes density zero");
            }
            if let Some(w) = witness {
                check_witness(e, w)?;
            }
            // Some prefix ratio up to 2^40 reaches half the claimed bound.
            let half = lower / BigInt::from(2);
            for j in 4..=40u32 {
                let n = 1u64 << j;
                for m in [n, n + n / 2] {
                    let c = prefix_count_with(e, m, budget).map_err(|_| "count failed")?;
                    if Rational::new(c.into(), m.into()) >= half {
                        return Ok(());
                    }
                }
            }
            Err("no prefix ratio near the claimed density")
        }
        Certificate::ZeroDensity {
            scheme,
            from,
            per_block,
            sparse_blocks,
        } => {
            if !expect_in {
                return Err("zero density proves membership");
            }
            for m in *from..*from + 6 {
                if sparse_blocks.as_ref().is_some_and(|s| s.member(m)) {
                    continue;
                }
                let (Some(lo), Some(hi)) = (scheme.boundary_u64(m), scheme.boundary_u64(m + 1)) else {
                    break;
                };
                let n = prefix_count_with(e, hi - 1, budget).map_err(|_| "count failed")?
                    - prefix_count_with(e, lo - 1, budget).map_err(|_| "count failed")?;
                if n > *per_block {
                    return Err("block holds more members than claimed");
                }
            }
            Ok(())
        }
    }
}

#[allow(dead_code)]
pub(crate) fn piece_weight(n: u64) -> Rational {
    dyadic(n)
}
