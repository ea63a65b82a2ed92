//! Upper densities on ℕ: two-valued ones from ideals, the dyadic sum over
//! an ω-partition, the supremum over a translation almost disjoint family,
//! and the classical asymptotic, logarithmic and Banach densities.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::families::TadFamily;
use crate::ideals::{ideal_member, talagrand_positive, IdealOracle, Partition, Verdict};
use crate::shape::{analyze, dyadic};
use crate::{classify_span, for_each_run, Budget, Error, Rational, SetExpr, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClassicalKind {
    Asymptotic,
    LowerAsymptotic,
    Logarithmic,
    Banach,
}

impl ClassicalKind {
    pub fn name(&self) -> &'static str {
        match self {
            ClassicalKind::Asymptotic => "asymptotic",
            ClassicalKind::LowerAsymptotic => "lower-asymptotic",
            ClassicalKind::Logarithmic => "logarithmic",
            ClassicalKind::Banach => "banach",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DensityValue {
    Exact(Rational),
    /// The value lies in `[lo, hi]`.
    Enclosure { lo: Rational, hi: Rational },
    LowerBound(Rational),
    /// An uncertified value read off finite prefixes.
    Estimate(Rational),
}

impl DensityValue {
    pub fn lo(&self) -> Rational {
        match self {
            DensityValue::Exact(v) | DensityValue::LowerBound(v) | DensityValue::Estimate(v) => v.clone(),
            DensityValue::Enclosure { lo, .. } => lo.clone(),
        }
    }

    pub fn hi(&self) -> Rational {
        match self {
            DensityValue::Exact(v) | DensityValue::Estimate(v) => v.clone(),
            DensityValue::Enclosure { hi, .. } => hi.clone(),
            DensityValue::LowerBound(_) => Rational::one(),
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            DensityValue::Exact(v) => Some(v),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DensityValue::Exact(_) => "exact",
            DensityValue::Enclosure { .. } => "enclosure",
            DensityValue::LowerBound(_) => "lower-bound",
            DensityValue::Estimate(_) => "estimate",
        }
    }

    /// Certified values only: estimates have no enclosure.
    pub fn is_certified(&self) -> bool {
        !matches!(self, DensityValue::Estimate(_))
    }
}

impl fmt::Display for DensityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityValue::Exact(v) => write!(f, "{v}"),
            DensityValue::Enclosure { lo, hi } => write!(f, "[{lo}, {hi}]"),
            DensityValue::LowerBound(v) => write!(f, ">= {v}"),
            DensityValue::Estimate(v) => write!(f, "~ {v}"),
        }
    }
}

/// Parameters shared by the evaluators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Settings {
    pub budget: Budget,
    /// Pieces examined by the ω-partition sum before the tail is bounded.
    pub terms: u64,
    /// Prefix length for uncertified estimates.
    pub horizon: u64,
    /// Translations `|k| <= shifts` tried by the family supremum.
    pub shifts: u64,
    /// Family members tried by the family supremum.
    pub members: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            budget: Budget::default(),
            terms: 20,
            horizon: 1 << 20,
            shifts: 16,
            members: usize::MAX,
        }
    }
}

pub trait UpperDensity {
    fn name(&self) -> String;
    fn evaluate(&self, e: &SetExpr) -> DensityValue;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DensityEvaluator {
    /// `0` on the ideal, `1` off it.
    TwoValued(IdealOracle),
    /// `Σ 2^-n` over the pieces `P_n` with `A ∩ P_n` outside the ideal.
    OmegaPartition { ideal: IdealOracle, pieces: Partition },
    /// `sup r_x` over members `C_x` that keep positive overlap with a translate.
    SupTad { family: TadFamily, values: Vec<Rational> },
    ClassicalUpper(ClassicalKind),
}

impl DensityEvaluator {
    pub fn evaluate_with(&self, e: &SetExpr, s: &Settings) -> DensityValue {
        match self {
            DensityEvaluator::TwoValued(ideal) => eval_two_valued(ideal, e, s.budget),
            DensityEvaluator::OmegaPartition { ideal, pieces } => {
                eval_omega_partition(ideal, *pieces, e, s.terms, s.budget).unwrap_or(DensityValue::Enclosure {
                    lo: Rational::zero(),
                    hi: Rational::one(),
                })
            }
            DensityEvaluator::SupTad { family, values } => {
                eval_sup_tad(family, values, e, s.shifts, s.members, s.budget).value
            }
            DensityEvaluator::ClassicalUpper(kind) => eval_classical(*kind, e, s.budget, s.horizon),
        }
    }
}

impl UpperDensity for DensityEvaluator {
    fn name(&self) -> String {
        match self {
            DensityEvaluator::TwoValued(i) => format!("two-valued({i:?})"),
            DensityEvaluator::OmegaPartition { ideal, .. } => format!("omega-partition({ideal:?})"),
            DensityEvaluator::SupTad { family, .. } => format!("sup-tad({} members)", family.len()),
            DensityEvaluator::ClassicalUpper(k) => String::from(k.name()),
        }
    }

    fn evaluate(&self, e: &SetExpr) -> DensityValue {
        self.evaluate_with(e, &Settings::default())
    }
}

pub fn eval_two_valued(ideal: &IdealOracle, e: &SetExpr, budget: Budget) -> DensityValue {
    match ideal_member(ideal, e, budget) {
        Verdict::In(_) => DensityValue::Exact(Rational::zero()),
        Verdict::NotIn(_) => DensityValue::Exact(Rational::one()),
        Verdict::Unknown(_) => DensityValue::Enclosure {
            lo: Rational::zero(),
            hi: Rational::one(),
        },
    }
}

/// Requires the piecewise-finite ideal of the same partition, for which the
/// pieces form an ω-partition and `A ∩ P_n ∉ I` means `A ∩ P_n` infinite.
pub fn eval_omega_partition(
    ideal: &IdealOracle,
    pieces: Partition,
    e: &SetExpr,
    terms: u64,
    budget: Budget,
) -> Result<DensityValue, Error> {
    if *ideal != IdealOracle::PieceFinite(pieces) {
        return Err(Error::Unsupported("ω-partition sums need the piecewise-finite ideal of the pieces"));
    }
    if let Ok(profile) = analyze(e).and_then(|a| a.piece_profile()) {
        return Ok(DensityValue::Exact(profile.weight()));
    }
    let terms = terms.clamp(1, Partition::MAX_PIECE);
    let mut lo = Rational::zero();
    let mut hi = dyadic(terms);
    for n in 1..=terms {
        let piece = SetExpr::inter(e.clone(), pieces.piece(n)?);
        match ideal_member(&IdealOracle::Fin, &piece, budget) {
            Verdict::NotIn(_) => {
                lo += dyadic(n);
                hi += dyadic(n);
            }
            Verdict::In(_) => {}
            Verdict::Unknown(_) => hi += dyadic(n),
        }
    }
    Ok(DensityValue::Enclosure { lo, hi })
}

/// A set of ω-partition density `r`, for dyadic `r = j/2^n` in `[0, 1]`.
pub fn richness_witness_omega(r: &Rational) -> Result<SetExpr, Error> {
    if r.is_negative() || *r > Rational::one() {
        return Err(Error::Range("density must lie in [0, 1]"));
    }
    if r.is_one() {
        return Ok(SetExpr::full());
    }
    let den = r.denom().to_u64().ok_or(Error::Range("denominator too large"))?;
    if !den.is_power_of_two() || den.trailing_zeros() as u64 > Partition::MAX_PIECE {
        return Err(Error::Range("density must be dyadic with denominator at most 2^62"));
    }
    let n = den.trailing_zeros() as u64;
    let num = r.numer().to_u64().unwrap();
    let parts = (1..=n)
        .filter(|i| num >> (n - i) & 1 == 1)
        .map(|i| Partition::Dyadic.piece(i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SetExpr::union_all(parts))
}

/// `⋃_{i=1..p} ap(i, q)`, of asymptotic density exactly `p/q`.
pub fn density_witness_asymptotic(r: &Rational) -> Result<SetExpr, Error> {
    if r.is_negative() || *r > Rational::one() {
        return Err(Error::Range("density must lie in [0, 1]"));
    }
    let p = r.numer().to_u64().unwrap();
    let q = r.denom().to_u64().ok_or(Error::Range("denominator too large"))?;
    if q > 1 << 20 {
        return Err(Error::Range("denominator too large"));
    }
    let parts = (1..=p).map(|i| SetExpr::ap(i, q)).collect::<Result<Vec<_>, _>>()?;
    Ok(SetExpr::union_all(parts))
}

const ESTIMATE_BITS: usize = 32;

fn approx(x: f64) -> Rational {
    let scale = (1u64 << ESTIMATE_BITS) as f64;
    let n = (x * scale + 0.5) as i64;
    Rational::new(BigInt::from(n), BigInt::one() << ESTIMATE_BITS)
}

/// Exact where the structure determines the density, an estimate from
/// prefixes up to `horizon` otherwise.
pub fn eval_classical(kind: ClassicalKind, e: &SetExpr, budget: Budget, horizon: u64) -> DensityValue {
    if let Ok(v) = analyze(e).and_then(|a| a.exact_density(kind)) {
        return DensityValue::Exact(v);
    }
    estimate(kind, e, budget, horizon.max(64)).map_or(
        DensityValue::Enclosure {
            lo: Rational::zero(),
            hi: Rational::one(),
        },
        DensityValue::Estimate,
    )
}

fn estimate(kind: ClassicalKind, e: &SetExpr, budget: Budget, h: u64) -> Result<Rational, Error> {
    let mut runs: Vec<(u64, u64, bool)> = Vec::new();
    for_each_run(e, 1, h, budget, |a, b, v| runs.push((a, b, v)))?;
    let from = h / 64;
    match kind {
        ClassicalKind::Asymptotic | ClassicalKind::LowerAsymptotic => {
            let upper = kind == ClassicalKind::Asymptotic;
            // Sparse sets may end no member run inside the window: use the last one.
            let last = runs.iter().rev().find(|r| r.2).map_or(from, |r| r.1);
            let from = from.min(last);
            let mut count = 0u64;
            let mut best: Option<(u64, u64)> = None;
            for &(a, b, v) in &runs {
                if v {
                    count += b - a + 1;
                }
                // Ratios peak at ends of member runs and dip at ends of gaps.
                if b >= from && v == upper {
                    let better = match best {
                        None => true,
                        Some((c, n)) => {
                            let lhs = count as u128 * n as u128;
                            let rhs = c as u128 * b as u128;
                            if upper {
                                lhs > rhs
                            } else {
                                lhs < rhs
                            }
                        }
                    };
                    if better {
                        best = Some((count, b));
                    }
                }
            }
            Ok(match best {
                Some((c, n)) => Rational::new(c.into(), n.into()),
                None if upper => Rational::zero(),
                None => Rational::new(count.into(), h.into()),
            })
        }
        ClassicalKind::Logarithmic => {
            let (mut num, mut den) = (0f64, 0f64);
            let mut best = 0f64;
            for &(a, b, v) in &runs {
                for n in a..=b {
                    let w = 1.0 / n as f64;
                    den += w;
                    if v {
                        num += w;
                    }
                }
                if b >= from {
                    best = best.max(num / den);
                }
            }
            Ok(approx(best))
        }
        ClassicalKind::Banach => {
            let w = (h / 64).clamp(1, 1 << 14);
            // Windows of length w starting at member run starts.
            let mut starts = Vec::with_capacity(runs.len());
            let mut cum = 0u64;
            for &(a, b, v) in &runs {
                starts.push((a, cum));
                if v {
                    cum += b - a + 1;
                }
            }
            let before = |x: u64| -> u64 {
                // members in [1, x)
                let i = starts.partition_point(|s| s.0 <= x).saturating_sub(1);
                let (a, c) = starts[i];
                let (_, b, v) = runs[i];
                c + if v { x.min(b + 1) - a } else { 0 }
            };
            let mut best = 0u64;
            for &(a, b, v) in &runs {
                if v && a + w <= h + 1 {
                    best = best.max(before(a + w) - before(a));
                }
                let _ = b;
            }
            Ok(Rational::new(best.into(), w.into()))
        }
    }
}

/// How the family supremum settled its value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SupCertificate {
    /// The set is finite.
    Finite,
    /// The set differs from `C_x + shift` in finitely many points.
    Equal { member: usize, shift: i64 },
    /// `C_x ∩ (e + shift)` contains infinitely many scheme intervals.
    Positive { member: usize, shift: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupTadValue {
    pub value: DensityValue,
    pub certificate: Option<SupCertificate>,
}

/// Code lengths probed before a member and shift get an exact check.
const FILTER_LEVELS: [u64; 3] = [6, 7, 8];

pub fn eval_sup_tad(
    family: &TadFamily,
    values: &[Rational],
    e: &SetExpr,
    shift_budget: u64,
    index_budget: usize,
    budget: Budget,
) -> SupTadValue {
    if ideal_member(&IdealOracle::Fin, e, budget).is_in() {
        return SupTadValue {
            value: DensityValue::Exact(Rational::zero()),
            certificate: Some(SupCertificate::Finite),
        };
    }
    let scheme = family.scheme();
    let s = shift_budget.min(i64::MAX as u64 / 2) as i64;
    let mut best: Option<(Rational, usize, i64)> = None;
    for (i, x) in family.branches().iter().enumerate().take(index_budget.min(values.len())) {
        let probes: Vec<(num_bigint::BigUint, num_bigint::BigUint)> = FILTER_LEVELS
            .iter()
            .filter_map(|&l| scheme.interval_of(2 * x.code(l)?).ok())
            .collect();
        for k in -s..=s {
            // I_m - k ⊆ e at the probed pattern blocks.
            let pass = probes.iter().all(|(lo, hi)| {
                let lo = BigInt::from(lo.clone()) - k;
                let hi = BigInt::from(hi.clone()) - k;
                match (lo.to_biguint(), hi.to_biguint()) {
                    (Some(lo), Some(hi)) => classify_span(e, &lo, &hi) == Ok(Span::In),
                    _ => false,
                }
            });
            if !pass {
                continue;
            }
            let member = SetExpr::translate(family.member(i), -k);
            let delta = SetExpr::union(
                SetExpr::diff(e.clone(), member.clone()),
                SetExpr::diff(member, e.clone()),
            );
            if ideal_member(&IdealOracle::Fin, &delta, budget).is_in() {
                return SupTadValue {
                    value: DensityValue::Exact(values[i].clone()),
                    certificate: Some(SupCertificate::Equal { member: i, shift: -k }),
                };
            }
            if best.as_ref().is_some_and(|b| b.0 >= values[i]) {
                continue;
            }
            let meet = SetExpr::inter(family.member(i), SetExpr::translate(e.clone(), k));
            if talagrand_positive(scheme, &meet, 0).is_not_in() {
                best = Some((values[i].clone(), i, k));
            }
        }
    }
    match best {
        Some((v, member, shift)) => SupTadValue {
            value: DensityValue::LowerBound(v),
            certificate: Some(SupCertificate::Positive { member, shift }),
        },
        None => SupTadValue {
            value: DensityValue::LowerBound(Rational::zero()),
            certificate: None,
        },
    }
}

/// Dyadic values `j/2^bits` for family members, distinct and in `(0, 1)`.
pub fn dyadic_values(count: usize) -> Vec<Rational> {
    let bits = (usize::BITS - count.leading_zeros()) as usize + 1;
    (1..=count)
        .map(|j| Rational::new(BigInt::from(j), BigInt::one() << bits))
        .collect()
}
