use densitylab_core::ideals::{ideal_member, recheck, IdealOracle, Partition, Weight};
use densitylab_core::verify::{default_corpus, gallery_block_set};
use densitylab_core::{prefix_count, Budget, Rational};

#[test]
fn corpus_counts_match_membership() {
    for e in default_corpus() {
        let mut count = 0;
        for n in 1..=20_000u64 {
            count += u64::from(e.member(n));
            if n % 2_500 == 0 {
                assert_eq!(prefix_count(&e, n), Ok(count), "{e} at {n}");
            }
        }
    }
}

#[test]
fn corpus_verdicts_recheck() {
    let ideals = [
        IdealOracle::Fin,
        IdealOracle::DensityZero,
        IdealOracle::Summable(Weight::Harmonic),
        IdealOracle::Summable(Weight::power_law(Rational::new(1.into(), 2.into())).unwrap()),
        IdealOracle::PieceFinite(Partition::Dyadic),
    ];
    let mut decided = 0;
    for e in default_corpus() {
        for ideal in &ideals {
            let v = ideal_member(ideal, &e, Budget::default());
            decided += usize::from(!v.is_unknown());
            assert_eq!(recheck(ideal, &e, &v), Ok(()), "{ideal:?} {e}");
        }
    }
    assert!(decided >= 200, "{decided}");
}

#[test]
fn block_gallery_passes() {
    let rep = gallery_block_set(20, 8);
    assert!(rep.passed(), "{:?}", rep.failures().next());
    assert_eq!(rep.counts().unknown, 0);
}
