//! Almost disjoint families from eventually periodic branches, and their
//! translation almost disjoint block versions.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::ideals::{talagrand_positive, Certificate, UnknownReason, Verdict};
use crate::{classify_span, for_each_run, Branch, Budget, Error, IntervalScheme, SetExpr, Span};

/// `A_x = {code(x↾n) : n >= 1}` for each branch `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedAdFamily {
    branches: Vec<Branch>,
}

impl SeedAdFamily {
    pub fn new(branches: Vec<Branch>) -> Result<Self, Error> {
        check_distinct(&branches)?;
        Ok(SeedAdFamily { branches })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn member(&self, i: usize) -> SetExpr {
        SetExpr::codes(self.branches[i].clone(), 1).unwrap()
    }
}

fn check_distinct(branches: &[Branch]) -> Result<(), Error> {
    let mut seen = BTreeSet::new();
    for b in branches {
        if !seen.insert(b) {
            return Err(Error::DuplicateBranch);
        }
    }
    Ok(())
}

/// `C_x = ⋃_{a ∈ A_x} I_{2a}` over a scheme with diverging gaps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TadFamily {
    scheme: IntervalScheme,
    branches: Vec<Branch>,
}

pub fn build_tad(scheme: IntervalScheme, branches: Vec<Branch>) -> Result<TadFamily, Error> {
    if !scheme.gaps_diverge() {
        return Err(Error::GapsBounded);
    }
    check_distinct(&branches)?;
    Ok(TadFamily { scheme, branches })
}

impl TadFamily {
    pub fn scheme(&self) -> IntervalScheme {
        self.scheme
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn position(&self, x: &Branch) -> Option<usize> {
        self.branches.iter().position(|b| b == x)
    }

    /// `{2a : a ∈ A_x}`.
    pub fn index_set(&self, i: usize) -> SetExpr {
        SetExpr::codes(self.branches[i].clone(), 2).unwrap()
    }

    pub fn member(&self, i: usize) -> SetExpr {
        SetExpr::blocks(self.scheme, self.index_set(i))
    }

    pub fn seed(&self) -> SeedAdFamily {
        SeedAdFamily {
            branches: self.branches.clone(),
        }
    }
}

/// `A_x ∩ A_y`: the codes of the common prefixes.
pub fn seed_intersection(x: &Branch, y: &Branch) -> Result<Vec<u64>, Error> {
    let l = x.common_prefix_len(y).ok_or(Error::SameBranch)?;
    (1..=l).map(|n| x.code(n).ok_or(Error::Overflow)).collect()
}

/// `C_x ∩ (C_y + k)` lies in `[1, bound) ∪ ⋃_{m ∈ blocks} I_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCertificate {
    pub scheme: IntervalScheme,
    pub shift: i64,
    /// Least `N` with `|I_n| > |k|` for every `n > N`.
    pub threshold: u64,
    /// `k_{2N+2}`.
    pub bound: BigUint,
    pub blocks: Vec<u64>,
}

impl PairCertificate {
    pub fn superset(&self) -> Result<SetExpr, Error> {
        let b = self.bound.to_u64().ok_or(Error::Overflow)?;
        let head = if b > 1 { SetExpr::range(1, b - 1)? } else { SetExpr::empty() };
        let blocks = SetExpr::blocks(self.scheme, SetExpr::finite(self.blocks.clone())?);
        Ok(SetExpr::union(head, blocks))
    }

    /// Upper bound on `|C_x ∩ (C_y + k)|`.
    pub fn size_bound(&self) -> BigUint {
        let mut total = self.bound.clone();
        for &m in &self.blocks {
            total += self.scheme.gap(m);
        }
        total
    }
}

/// The certificate for every shift at once: thresholds come from the
/// scheme and the blocks from the seed intersection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftRule {
    pub scheme: IntervalScheme,
    pub blocks: Vec<u64>,
}

impl ShiftRule {
    pub fn certificate(&self, k: i64) -> PairCertificate {
        let n = self.scheme.shift_threshold(k);
        PairCertificate {
            scheme: self.scheme,
            shift: k,
            threshold: n,
            bound: self.scheme.boundary(2 * n + 2),
            blocks: self.blocks.clone(),
        }
    }
}

pub fn certify_all_shifts(family: &TadFamily, i: usize, j: usize) -> Result<ShiftRule, Error> {
    let common = seed_intersection(&family.branches[i], &family.branches[j])?;
    Ok(ShiftRule {
        scheme: family.scheme,
        blocks: common.into_iter().map(|a| 2 * a).collect(),
    })
}

/// Issues the certificate for `(x_i, x_j, k)` and confirms it by walking the
/// runs of `C_x ∩ (C_y + k)` outside the superset up to `limit`.
pub fn verify_tad_pair(family: &TadFamily, i: usize, j: usize, k: i64, limit: u64) -> Result<PairCertificate, Error> {
    let cert = certify_all_shifts(family, i, j)?.certificate(k);
    let meet = SetExpr::inter(family.member(i), SetExpr::translate(family.member(j), k));
    let escape = SetExpr::diff(meet, cert.superset()?);
    let mut escaped = false;
    for_each_run(&escape, 1, limit, Budget::default(), |_, _, v| escaped |= v)?;
    if escaped {
        return Err(Error::InvalidValue("intersection escapes the certified superset"));
    }
    Ok(cert)
}

/// Positivity of `C_x`: its pattern `{2a : a ∈ A_x}` is infinite, and the
/// first `probe` pattern intervals are checked to lie in `C_x`.
pub fn member_positivity(family: &TadFamily, i: usize, probe: usize) -> Verdict {
    let Some(x) = family.branches.get(i) else {
        return Verdict::Unknown(UnknownReason::Unsupported("not a family member"));
    };
    let e = family.member(i);
    let v = talagrand_positive(family.scheme, &e, 0);
    let Verdict::NotIn(Certificate::IntervalPattern { .. }) = &v else { return v };
    let mut contained = 0u64;
    for n in 1..=probe as u64 {
        let m: BigUint = x.code_big(n) * 2u32;
        let Some(m) = m.to_u64() else { break };
        let Ok((lo, hi)) = family.scheme.interval_of(m) else { break };
        if classify_span(&e, &lo, &hi) == Ok(Span::In) {
            contained += 1;
        }
    }
    if contained == probe as u64 {
        v
    } else {
        Verdict::Unknown(UnknownReason::Inconclusive {
            contained,
            probed: probe as u64,
        })
    }
}
