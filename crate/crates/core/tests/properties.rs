use densitylab_core::densities::{eval_classical, ClassicalKind, DensityEvaluator, DensityValue, UpperDensity};
use densitylab_core::ideals::{ideal_member, recheck, Certificate, IdealOracle, Partition, Verdict, Weight};
use densitylab_core::{
    enumerate, prefix_count, prefix_count_enumerated, Branch, Budget, IntervalScheme, Rational, SetExpr,
};
use num_traits::ToPrimitive;
use proptest::prelude::*;

const SCAN: u64 = 3_000;

fn scheme() -> impl Strategy<Value = IntervalScheme> {
    prop_oneof![
        Just(IntervalScheme::dyadic()),
        Just(IntervalScheme::geometric(2, 0).unwrap()),
        Just(IntervalScheme::geometric(3, 0).unwrap()),
        Just(IntervalScheme::Triangular),
        Just(IntervalScheme::polynomial(2).unwrap()),
        (1u64..6).prop_map(|c| IntervalScheme::linear(c).unwrap()),
    ]
}

fn branch() -> impl Strategy<Value = Branch> {
    (prop::collection::vec(any::<bool>(), 0..3), prop::collection::vec(any::<bool>(), 1..3))
        .prop_map(|(h, c)| Branch::new(h, c).unwrap())
}

fn leaf() -> impl Strategy<Value = SetExpr> {
    prop_oneof![
        Just(SetExpr::empty()),
        Just(SetExpr::full()),
        prop::collection::btree_set(1u64..200, 0..6).prop_map(|s| SetExpr::finite(s.into_iter().collect()).unwrap()),
        (1u64..20, 1u64..12).prop_map(|(a, d)| SetExpr::ap(a, d).unwrap()),
        (scheme(), 1u64..5, 1u64..4).prop_map(|(s, a, d)| SetExpr::blocks(s, SetExpr::ap(a, d).unwrap())),
        (branch(), 1u64..4).prop_map(|(b, s)| SetExpr::codes(b, s).unwrap()),
    ]
}

fn expr() -> impl Strategy<Value = SetExpr> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SetExpr::union(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SetExpr::inter(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SetExpr::diff(a, b)),
            inner.clone().prop_map(SetExpr::complement),
            (inner, -6i64..7).prop_map(|(a, k)| SetExpr::translate(a, k)),
        ]
    })
}

fn brute(e: &SetExpr, n: u64) -> u64 {
    (1..=n).filter(|&m| e.member(m)).count() as u64
}

fn ideals() -> Vec<IdealOracle> {
    vec![
        IdealOracle::Fin,
        IdealOracle::DensityZero,
        IdealOracle::Summable(Weight::Harmonic),
        IdealOracle::PieceFinite(Partition::Dyadic),
    ]
}

fn omega() -> DensityEvaluator {
    DensityEvaluator::OmegaPartition {
        ideal: IdealOracle::PieceFinite(Partition::Dyadic),
        pieces: Partition::Dyadic,
    }
}

fn certified_le(a: &DensityValue, b: &DensityValue) -> bool {
    !a.is_certified() || !b.is_certified() || a.lo() <= b.hi()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn prefix_counts_agree_with_membership(e in expr(), n in 1u64..100_000) {
        let want = brute(&e, n);
        prop_assert_eq!(prefix_count(&e, n), Ok(want));
        prop_assert_eq!(prefix_count_enumerated(&e, n, Budget::default()), Ok(want));
    }

    #[test]
    fn enumeration_lists_members(e in expr()) {
        let got = enumerate(&e, SCAN, Budget::default()).unwrap();
        let want: Vec<u64> = (1..=SCAN).filter(|&m| e.member(m)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn verdicts_recheck_and_match_samples(e in expr()) {
        for ideal in ideals() {
            let v = ideal_member(&ideal, &e, Budget::default());
            prop_assert!(recheck(&ideal, &e, &v).is_ok(), "{:?} {} {:?}", ideal, e, v);
            if let (IdealOracle::Fin, Verdict::In(Certificate::Boundedness { bound, .. })) = (&ideal, &v) {
                let from = bound.to_u64().unwrap_or(u64::MAX).max(1);
                prop_assert!((from..from.saturating_add(100_000)).all(|m| !e.member(m)));
            }
        }
    }

    #[test]
    fn finite_and_piece_finite_are_ordered(e in expr()) {
        // Fin ⊆ every other ideal here.
        if ideal_member(&IdealOracle::Fin, &e, Budget::default()).is_in() {
            for ideal in ideals() {
                prop_assert!(!ideal_member(&ideal, &e, Budget::default()).is_not_in());
            }
        }
    }

    #[test]
    fn omega_partition_is_monotone_and_subadditive(a in expr(), b in expr()) {
        let ev = omega();
        let (da, db) = (ev.evaluate(&a), ev.evaluate(&b));
        let meet = ev.evaluate(&SetExpr::inter(a.clone(), b.clone()));
        let join = ev.evaluate(&SetExpr::union(a.clone(), b.clone()));
        prop_assert!(certified_le(&meet, &da));
        prop_assert!(certified_le(&da, &join));
        prop_assert!(join.lo() <= da.hi() + db.hi());
        prop_assert!(da.lo() >= Rational::from_integer(0.into()) && da.hi() <= Rational::from_integer(1.into()));
    }

    #[test]
    fn classical_values_are_ordered_and_shift_invariant(e in expr(), k in -9i64..10) {
        let exact = |kind, e: &SetExpr| eval_classical(kind, e, Budget::default(), 1 << 16).exact().cloned();
        let lower = exact(ClassicalKind::LowerAsymptotic, &e);
        let upper = exact(ClassicalKind::Asymptotic, &e);
        let banach = exact(ClassicalKind::Banach, &e);
        if let (Some(l), Some(u)) = (&lower, &upper) {
            prop_assert!(l <= u);
        }
        if let (Some(u), Some(b)) = (&upper, &banach) {
            prop_assert!(u <= b);
        }
        let moved = exact(ClassicalKind::Asymptotic, &SetExpr::translate(e.clone(), k));
        if let (Some(u), Some(m)) = (&upper, &moved) {
            prop_assert_eq!(u, m);
        }
    }
}
