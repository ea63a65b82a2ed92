//! Property suites over expression corpora, and the two concrete
//! computations on block sets and gap sets.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::densities::{eval_classical, eval_sup_tad, ClassicalKind, DensityEvaluator, DensityValue, Settings, SupCertificate, UpperDensity};
use crate::families::build_tad;
use crate::ideals::{ideal_member, talagrand_positive, IdealOracle, Verdict};
use crate::{prefix_count, Branch, Budget, IntervalScheme, Rational, SetExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Pass,
    Fail,
    Unknown,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub input: String,
    pub expected: String,
    pub got: String,
    pub outcome: Outcome,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub pass: usize,
    pub fail: usize,
    pub unknown: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(suite: &str) -> Self {
        Report {
            suite: suite.to_string(),
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, input: String, expected: String, got: String, outcome: Outcome) {
        self.checks.push(Check {
            name: name.to_string(),
            input,
            expected,
            got,
            outcome,
        });
    }

    fn check(&mut self, name: &str, input: String, expected: String, got: String, ok: bool) {
        self.push(name, input, expected, got, if ok { Outcome::Pass } else { Outcome::Fail });
    }

    pub fn counts(&self) -> Counts {
        let mut c = Counts::default();
        for ch in &self.checks {
            match ch.outcome {
                Outcome::Pass => c.pass += 1,
                Outcome::Fail => c.fail += 1,
                Outcome::Unknown => c.unknown += 1,
            }
        }
        c
    }

    pub fn passed(&self) -> bool {
        self.counts().fail == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.outcome == Outcome::Fail)
    }

    /// Records in a stable order.
    pub fn sorted(mut self) -> Self {
        self.checks.sort_by(|a, b| (&a.name, &a.input).cmp(&(&b.name, &b.input)));
        self
    }

    pub fn merge(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }
}

fn r(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

fn is_finite(e: &SetExpr) -> bool {
    ideal_member(&IdealOracle::Fin, e, Budget::default()).is_in()
}

/// Axioms of an upper density in enclosure form: `hi(δ(F)) = 0` for finite
/// `F`, `lo(δ(ℕ)) = 1`, monotonicity along `A∩B ⊆ A ⊆ A∪B`, and
/// subadditivity, over singletons and the first `pair_budget` pairs.
pub fn check_axioms(ev: &dyn UpperDensity, corpus: &[SetExpr], pair_budget: usize) -> Report {
    let mut rep = Report::new(&format!("axioms/{}", ev.name()));
    let full = ev.evaluate(&SetExpr::full());
    rep.check("unit", "full".into(), "lo = 1".into(), full.to_string(), full.lo().is_one());
    let vals: Vec<DensityValue> = corpus.iter().map(|e| ev.evaluate(e)).collect();
    for (e, v) in corpus.iter().zip(&vals) {
        if is_finite(e) {
            rep.check("finite", e.to_string(), "hi = 0".into(), v.to_string(), v.hi().is_zero());
        }
        let ok = v.lo() <= v.hi() && v.lo() >= Rational::zero() && v.hi() <= Rational::one();
        rep.check("range", e.to_string(), "0 <= lo <= hi <= 1".into(), v.to_string(), ok);
    }
    let mut pairs = 0;
    'outer: for i in 0..corpus.len() {
        for j in i + 1..corpus.len() {
            if pairs >= pair_budget {
                break 'outer;
            }
            pairs += 1;
            let (a, b) = (&corpus[i], &corpus[j]);
            let (va, vb) = (&vals[i], &vals[j]);
            let input = format!("{a} ; {b}");
            let meet = ev.evaluate(&SetExpr::inter(a.clone(), b.clone()));
            let join = ev.evaluate(&SetExpr::union(a.clone(), b.clone()));
            rep.check(
                "monotone",
                input.clone(),
                "lo(A∩B) <= hi(A), lo(A) <= hi(A∪B), lo(B) <= hi(A∪B)".into(),
                format!("{meet} ; {va} ; {vb} ; {join}"),
                meet.lo() <= va.hi() && meet.lo() <= vb.hi() && va.lo() <= join.hi() && vb.lo() <= join.hi(),
            );
            rep.check(
                "subadditive",
                input,
                "lo(A∪B) <= hi(A) + hi(B)".into(),
                format!("{join} ; {va} ; {vb}"),
                join.lo() <= va.hi() + vb.hi(),
            );
        }
    }
    rep.sorted()
}

fn consistent(a: &DensityValue, b: &DensityValue) -> bool {
    match (a, b) {
        (DensityValue::Exact(x), DensityValue::Exact(y)) => x == y,
        _ => a.lo().max(b.lo()) <= a.hi().min(b.hi()),
    }
}

/// `δ(A + k)` against `δ(A)` for `0 < |k| <= k_max`. The family supremum
/// gets its shift budget enlarged by `|k|` and must transfer certificates.
pub fn check_translation(ev: &DensityEvaluator, corpus: &[SetExpr], k_max: u64, settings: &Settings) -> Report {
    let mut rep = Report::new(&format!("translation/{}", ev.name()));
    let k_max = k_max as i64;
    for e in corpus {
        match ev {
            DensityEvaluator::SupTad { family, values } => {
                let base = eval_sup_tad(family, values, e, settings.shifts, settings.members, settings.budget);
                for k in (-k_max..=k_max).filter(|&k| k != 0) {
                    let t = SetExpr::translate(e.clone(), k);
                    let wide = settings.shifts + k.unsigned_abs();
                    let moved = eval_sup_tad(family, values, &t, wide, settings.members, settings.budget);
                    let input = format!("{e} ; k = {k}");
                    let transfer = match &base.certificate {
                        Some(SupCertificate::Positive { member, shift }) => {
                            let meet = SetExpr::inter(family.member(*member), SetExpr::translate(t.clone(), shift - k));
                            talagrand_positive(family.scheme(), &meet, 0).is_not_in()
                        }
                        _ => true,
                    };
                    rep.check(
                        "sup-tad transfer",
                        input,
                        base.value.to_string(),
                        moved.value.to_string(),
                        base.value == moved.value && transfer,
                    );
                }
            }
            _ => {
                let v = ev.evaluate_with(e, settings);
                for k in (-k_max..=k_max).filter(|&k| k != 0) {
                    let w = ev.evaluate_with(&SetExpr::translate(e.clone(), k), settings);
                    rep.check(
                        "translate",
                        format!("{e} ; k = {k}"),
                        v.to_string(),
                        w.to_string(),
                        consistent(&v, &w),
                    );
                }
            }
        }
    }
    rep.sorted()
}

/// On decided entries, `δ(A) = 0` exactly when `A` lies in the ideal.
pub fn check_null_ideal(ev: &DensityEvaluator, ideal: &IdealOracle, corpus: &[SetExpr]) -> Report {
    let mut rep = Report::new(&format!("null-ideal/{}", ev.name()));
    for e in corpus {
        let v = ev.evaluate(e);
        let verdict = ideal_member(ideal, e, Budget::default());
        let got = format!("{v} ; {}", verdict_name(&verdict));
        match (v.exact(), &verdict) {
            (Some(x), Verdict::In(_) | Verdict::NotIn(_)) => {
                let ok = x.is_zero() == verdict.is_in();
                rep.check("zero iff member", e.to_string(), "δ = 0 ⇔ In".into(), got, ok);
            }
            _ => rep.push("zero iff member", e.to_string(), "decided".into(), got, Outcome::Unknown),
        }
    }
    rep.sorted()
}

pub fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::In(_) => "in",
        Verdict::NotIn(_) => "not-in",
        Verdict::Unknown(_) => "unknown",
    }
}

pub fn a_star() -> SetExpr {
    SetExpr::blocks(IntervalScheme::dyadic(), SetExpr::ap(2, 2).unwrap())
}

/// Densities of `A★ = ⋃ I_{2n}` over `I_n = (2^n, 2^(n+1)]`, the interval
/// ratios behind them, and the bound `|B ∩ I_n| / |I_n| <= k/2^n` for
/// `B = (A★ + k) ∖ A★`.
pub fn gallery_block_set(max_n: u64, max_k: u64) -> Report {
    let mut rep = Report::new("gallery/block-set");
    let a = a_star();
    let b = Budget::default();
    for (kind, want) in [(ClassicalKind::Asymptotic, r(2, 3)), (ClassicalKind::LowerAsymptotic, r(1, 3))] {
        let v = eval_classical(kind, &a, b, 1 << 20);
        rep.check(
            kind.name(),
            a.to_string(),
            want.to_string(),
            v.to_string(),
            v == DensityValue::Exact(want),
        );
    }
    let s = IntervalScheme::dyadic();
    let len = |m: u64| BigInt::from(s.gap(m));
    for n in 1..=max_n {
        let lower = Rational::new(len(2 * n), len(2 * n - 1) + len(2 * n));
        let upper = Rational::new(len(2 * n), len(2 * n) + len(2 * n + 1));
        rep.check("ratio even/odd-even", format!("n = {n}"), "2/3".into(), lower.to_string(), lower == r(2, 3));
        rep.check("ratio even/even-odd", format!("n = {n}"), "1/3".into(), upper.to_string(), upper == r(1, 3));
    }
    for k in 1..=max_k {
        let d = SetExpr::diff(SetExpr::translate(a.clone(), k as i64), a.clone());
        for n in 1..=max_n {
            let (lo, hi) = (s.boundary_u64(n).unwrap(), s.boundary_u64(n + 1).unwrap());
            let got = match (prefix_count(&d, hi - 1), prefix_count(&d, lo - 1)) {
                (Ok(x), Ok(y)) => Some(x - y),
                _ => None,
            };
            let bound = r(k as i64, 1) / (BigInt::one() << n as usize);
            match got {
                Some(c) => {
                    let ratio = Rational::new(c.into(), (hi - lo).into());
                    rep.check(
                        "shift difference",
                        format!("k = {k}, n = {n}"),
                        format!("<= {bound}"),
                        ratio.to_string(),
                        ratio <= bound,
                    );
                }
                None => rep.push("shift difference", format!("k = {k}, n = {n}"), format!("<= {bound}"), "count failed".into(), Outcome::Unknown),
            }
        }
        let v = ideal_member(&IdealOracle::DensityZero, &d, b);
        let outcome = match &v {
            Verdict::In(_) => Outcome::Pass,
            Verdict::NotIn(_) => Outcome::Fail,
            Verdict::Unknown(_) => Outcome::Unknown,
        };
        rep.push("shift difference null", format!("k = {k}"), "in".into(), verdict_name(&v).into(), outcome);
    }
    rep.sorted()
}

/// `B = {n(n+1)/2}`: gaps strictly increase, and each shift `0 < |l| <= K`
/// is checked for `|(B + l) ∩ B ∩ [1, N]| <= 1`.
pub fn gallery_gap_set(n_max: u64, k_max: u64) -> Report {
    let mut rep = Report::new("gallery/gap-set");
    let mut tri = Vec::new();
    let mut j = 1u64;
    while j * (j + 1) / 2 <= n_max {
        tri.push(j * (j + 1) / 2);
        j += 1;
    }
    let increasing = tri.windows(3).all(|w| w[2] - w[1] > w[1] - w[0]);
    rep.check("gaps increase", format!("N = {n_max}"), "strict".into(), increasing.to_string(), increasing);
    let set: BTreeSet<u64> = tri.iter().copied().collect();
    for l in (-(k_max as i64)..=k_max as i64).filter(|&l| l != 0) {
        let hits: Vec<u64> = tri
            .iter()
            .filter_map(|&b| {
                let x = b as i64 + l;
                (x >= 1 && x as u64 <= n_max && set.contains(&(x as u64))).then_some(x as u64)
            })
            .collect();
        rep.check(
            "coincidences",
            format!("l = {l}"),
            "<= 1".into(),
            format!("{} {:?}", hits.len(), hits),
            hits.len() <= 1,
        );
    }
    rep
}

fn br(s: &str) -> Branch {
    s.parse().unwrap()
}

/// Branches used for family members in the default corpus.
pub fn corpus_branches() -> Vec<Branch> {
    ["|0", "|1", "0|1", "1|0", "|01", "1|10"].iter().map(|s| br(s)).collect()
}

/// About fifty expressions over every constructor.
pub fn default_corpus() -> Vec<SetExpr> {
    let ap = |a, d| SetExpr::ap(a, d).unwrap();
    let fin = |v: Vec<u64>| SetExpr::finite(v).unwrap();
    let dy = IntervalScheme::dyadic();
    let a = a_star();
    let geo_fam = build_tad(dy, corpus_branches()).unwrap();
    let tri_fam = build_tad(IntervalScheme::Triangular, corpus_branches()).unwrap();
    let mut c = vec![
        SetExpr::empty(),
        SetExpr::full(),
        fin(vec![1]),
        fin(vec![2, 3, 5, 7, 11, 13]),
        SetExpr::range(1, 100).unwrap(),
        SetExpr::range(500, 700).unwrap(),
        ap(1, 2),
        ap(2, 4),
        ap(4, 8),
        ap(3, 7),
        ap(5, 1),
        SetExpr::union(ap(1, 2), ap(4, 8)),
        SetExpr::union_all(vec![ap(1, 2), ap(4, 8), ap(8, 16)]),
        SetExpr::complement(ap(2, 4)),
        a.clone(),
        SetExpr::complement(a.clone()),
        SetExpr::translate(a.clone(), 1),
        SetExpr::translate(a.clone(), -3),
        SetExpr::diff(SetExpr::translate(a.clone(), 3), a.clone()),
        SetExpr::inter(a.clone(), ap(1, 3)),
        SetExpr::union(a.clone(), fin(vec![1, 2])),
        SetExpr::blocks(dy, ap(1, 3)),
        SetExpr::blocks(IntervalScheme::geometric(3, 0).unwrap(), ap(1, 2)),
        SetExpr::blocks(IntervalScheme::Triangular, ap(2, 2)),
        SetExpr::blocks(IntervalScheme::polynomial(2).unwrap(), ap(1, 3)),
        SetExpr::blocks(IntervalScheme::linear(4).unwrap(), ap(1, 3)),
        SetExpr::blocks(dy, fin(vec![1, 3, 5])),
        SetExpr::codes(br("|0"), 1).unwrap(),
        SetExpr::translate(SetExpr::codes(br("|0"), 1).unwrap(), 1),
        SetExpr::codes(br("0|1"), 3).unwrap(),
        SetExpr::union(SetExpr::codes(br("1|0"), 1).unwrap(), ap(6, 12)),
        SetExpr::inter(ap(2, 2), SetExpr::codes(br("|1"), 1).unwrap()),
        SetExpr::translate(ap(1, 2), 1),
        SetExpr::translate(fin(vec![1, 2, 3]), -2),
        SetExpr::diff(SetExpr::full(), SetExpr::range(1, 1000).unwrap()),
    ];
    for i in [0, 1, 2, 4] {
        c.push(geo_fam.member(i));
    }
    c.push(SetExpr::translate(geo_fam.member(3), 5));
    c.push(SetExpr::union(geo_fam.member(0), geo_fam.member(1)));
    c.push(SetExpr::inter(geo_fam.member(2), SetExpr::translate(geo_fam.member(3), 2)));
    for i in [0, 3] {
        c.push(tri_fam.member(i));
    }
    c.push(SetExpr::translate(tri_fam.member(1), -4));
    c.push(SetExpr::union(tri_fam.member(2), ap(1, 4)));
    c.push(SetExpr::diff(ap(1, 1), SetExpr::union(a.clone(), ap(1, 2))));
    c.push(SetExpr::union(SetExpr::translate(a.clone(), 2), SetExpr::translate(a.clone(), -2)));
    c.push(SetExpr::inter(SetExpr::complement(a.clone()), ap(2, 8)));
    c.push(SetExpr::blocks(dy, SetExpr::codes(br("0|1"), 1).unwrap()));
    c.push(SetExpr::diff(ap(1, 3), SetExpr::translate(a, 1)));
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{dyadic_values, DensityValue};
    use crate::ideals::Partition;

    struct Corrupt;

    impl UpperDensity for Corrupt {
        fn name(&self) -> String {
            "corrupt".into()
        }
        fn evaluate(&self, _: &SetExpr) -> DensityValue {
            DensityValue::Exact(r(1, 2))
        }
    }

    #[test]
    fn corrupted_density_fails() {
        let rep = check_axioms(&Corrupt, &default_corpus()[..6], 4);
        assert!(!rep.passed());
        assert!(rep.failures().any(|c| c.name == "unit"));
        assert!(rep.failures().any(|c| c.name == "finite"));
    }

    #[test]
    fn two_valued_fin_axioms_and_translation() {
        let ev = DensityEvaluator::TwoValued(IdealOracle::Fin);
        let corpus = default_corpus();
        let rep = check_axioms(&ev, &corpus[..20], 100);
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
        let rep = check_translation(&ev, &corpus[..20], 3, &Settings::default());
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn null_ideal_two_valued_density_zero() {
        let ev = DensityEvaluator::TwoValued(IdealOracle::DensityZero);
        let rep = check_null_ideal(&ev, &IdealOracle::DensityZero, &[a_star(), SetExpr::range(3, 9).unwrap()]);
        assert_eq!(rep.counts().pass, 2);
    }

    #[test]
    fn omega_translation_of_second_piece() {
        let ev = DensityEvaluator::OmegaPartition {
            ideal: IdealOracle::PieceFinite(Partition::Dyadic),
            pieces: Partition::Dyadic,
        };
        let s = Settings::default();
        assert_eq!(ev.evaluate_with(&SetExpr::ap(2, 4).unwrap(), &s), DensityValue::Exact(r(1, 4)));
        let moved = SetExpr::translate(SetExpr::ap(2, 4).unwrap(), 1);
        assert_eq!(ev.evaluate_with(&moved, &s), DensityValue::Exact(r(1, 2)));
    }

    #[test]
    fn gallery_examples() {
        assert!(gallery_block_set(20, 8).passed());
        let rep = gallery_gap_set(1000, 2);
        let l2 = rep.checks.iter().find(|c| c.input == "l = 2").unwrap();
        assert_eq!(l2.got, "1 [3]");
        let rep = gallery_gap_set(1000, 9);
        let l9 = rep.checks.iter().find(|c| c.input == "l = 9").unwrap();
        assert_eq!(l9.got, "3 [10, 15, 45]");
    }

    #[test]
    fn sup_tad_member_translation() {
        let fam = build_tad(IntervalScheme::dyadic(), corpus_branches()).unwrap();
        let values = dyadic_values(fam.len());
        let ev = DensityEvaluator::SupTad { family: fam.clone(), values };
        let rep = check_translation(&ev, &[fam.member(2)], 7, &Settings::default());
        assert!(rep.passed(), "{:?}", rep.failures().collect::<Vec<_>>());
    }
}
