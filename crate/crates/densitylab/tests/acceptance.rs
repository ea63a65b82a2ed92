//! Acceptance criteria. Every test prints one `PASS` / `FAIL` line; run with
//! `cargo test -p densitylab --test acceptance -- --nocapture --test-threads 1`
//! to see them in order.

use std::time::{Duration, Instant};

use densitylab::cli::tad_report;
use densitylab_core::densities::{
    density_witness_asymptotic, dyadic_values, eval_classical, eval_omega_partition, eval_sup_tad,
    richness_witness_omega, ClassicalKind, DensityEvaluator, DensityValue, Settings,
};
use densitylab_core::families::{build_tad, verify_tad_pair};
use densitylab_core::ideals::{ideal_member, recheck, Certificate, DivergentTail, IdealOracle, Partition, Verdict, Weight};
use densitylab_core::verify::{
    a_star, check_axioms, check_null_ideal, check_translation, corpus_branches, default_corpus, Report,
};
use densitylab_core::{
    prefix_count, prefix_count_closed, prefix_count_enumerated, Branch, Budget, IntervalScheme, Rational, SetExpr,
};
use num_bigint::BigInt;

const C1_LIMIT: Duration = Duration::from_secs(1);
const C2_MAX_N: u64 = 20;
const C3_MAX_K: i64 = 8;
const C3_MAX_N: u32 = 20;
const C4_N: u64 = 1_000_000;
const C4_K: i64 = 100;
const C4_MAX_HITS: u64 = 1;
const C4_LIMIT: Duration = Duration::from_secs(10);
const C5_PAIRS: usize = 400;
const C5_SHIFTS: u64 = 8;
const C5_RICHNESS_BITS: u32 = 10;
const C6_BRANCHES: usize = 64;
const C6_SHIFTS: i64 = 16;
const C6_ENUMERATION: u64 = 1_000_000;
const C6_PROBE: usize = 10;
const C6_LIMIT: Duration = Duration::from_secs(60);
const C7_FINITE_SETS: u64 = 20;
const C7_SHIFTS: u64 = 8;
const C9_POINTS: [u64; 3] = [1_000, 10_000, 100_000];
const C9_MAX_Q: i64 = 20;
const C9_SCALE: u64 = 10_000;
const C9_TOLERANCE: f64 = 1e-3;

fn r(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

fn verdict_line(id: &str, ok: bool, detail: &str) {
    println!("criterion {id}: {} {detail}", if ok { "PASS" } else { "FAIL" });
}

fn suite_line(id: &str, rep: &Report) -> bool {
    let c = rep.counts();
    let ok = c.fail == 0 && c.unknown == 0 && c.pass > 0;
    verdict_line(id, ok, &format!("{}: {} pass, {} fail, {} unknown", rep.suite, c.pass, c.fail, c.unknown));
    for f in rep.failures().take(5) {
        println!("    {} [{}] expected {}, got {}", f.name, f.input, f.expected, f.got);
    }
    ok
}

fn omega() -> DensityEvaluator {
    DensityEvaluator::OmegaPartition {
        ideal: IdealOracle::PieceFinite(Partition::Dyadic),
        pieces: Partition::Dyadic,
    }
}

/// Members of `e` in `[lo, hi]` by direct membership.
fn brute_count(e: &SetExpr, lo: u64, hi: u64) -> u64 {
    (lo..=hi).filter(|&n| e.member(n)).count() as u64
}

/// `|e ∩ [lo, hi)|` from closed-form prefix counts.
fn window_count(e: &SetExpr, lo: u64, hi: u64) -> u64 {
    prefix_count(e, hi - 1).unwrap() - prefix_count(e, lo - 1).unwrap()
}

#[test]
fn c1_block_set_exact_densities() {
    let t = Instant::now();
    let upper = eval_classical(ClassicalKind::Asymptotic, &a_star(), Budget::default(), 1 << 20);
    let lower = eval_classical(ClassicalKind::LowerAsymptotic, &a_star(), Budget::default(), 1 << 20);
    let dt = t.elapsed();
    let ok = upper == DensityValue::Exact(r(2, 3)) && lower == DensityValue::Exact(r(1, 3)) && dt < C1_LIMIT;
    verdict_line("1", ok, &format!("upper {upper}, lower {lower}, {dt:?}"));
    assert!(ok);
}

#[test]
fn c2_interval_ratio_identities() {
    let s = IntervalScheme::dyadic();
    let a = a_star();
    let mut ok = true;
    for n in 1..=C2_MAX_N {
        let k = |m: u64| s.boundary_u64(m).unwrap();
        // |A★ ∩ (I_{2n-1} ∪ I_{2n})| = |I_{2n}|, and likewise for I_{2n} ∪ I_{2n+1}.
        let lower = Rational::new(window_count(&a, k(2 * n - 1), k(2 * n + 1)).into(), (k(2 * n + 1) - k(2 * n - 1)).into());
        let upper = Rational::new(window_count(&a, k(2 * n), k(2 * n + 2)).into(), (k(2 * n + 2) - k(2 * n)).into());
        let len = |m: u64| BigInt::from(s.gap(m));
        let by_len = Rational::new(len(2 * n), len(2 * n - 1) + len(2 * n));
        ok &= lower == r(2, 3) && upper == r(1, 3) && by_len == r(2, 3);
        if n <= 5 {
            // Oracle: interval lengths and membership counted one by one.
            assert_eq!(brute_count(&a, k(2 * n - 1), k(2 * n + 1) - 1), 1 << (2 * n));
            assert_eq!(brute_count(&a, k(2 * n), k(2 * n + 2) - 1), 1 << (2 * n));
        }
    }
    verdict_line("2", ok, &format!("n = 1..{C2_MAX_N}: ratios 2/3 and 1/3"));
    assert!(ok);
}

#[test]
fn c3_shift_difference_bound() {
    let s = IntervalScheme::dyadic();
    let a = a_star();
    let mut worst = Rational::from_integer(0.into());
    let mut ok = true;
    for k in 1..=C3_MAX_K {
        let b = SetExpr::diff(SetExpr::translate(a.clone(), k), a.clone());
        for n in 1..=C3_MAX_N {
            let (lo, hi) = (s.boundary_u64(n as u64).unwrap(), s.boundary_u64(n as u64 + 1).unwrap());
            let c = window_count(&b, lo, hi);
            if n <= 14 {
                assert_eq!(c, brute_count(&b, lo, hi - 1), "k = {k}, n = {n}");
            }
            let ratio = Rational::new(c.into(), (hi - lo).into());
            let bound = Rational::new(k.into(), BigInt::from(1u64 << n));
            ok &= ratio <= bound;
            worst = worst.max(ratio / bound);
        }
    }
    verdict_line("3", ok, &format!("k = 1..{C3_MAX_K}, n = 1..{C3_MAX_N}: max ratio / bound = {worst}"));
    assert!(ok);
}

/// `{n(n+1)/2 : n >= 1}` as the boundary points of the triangular scheme.
fn triangular_numbers() -> SetExpr {
    let x = SetExpr::blocks(IntervalScheme::Triangular, SetExpr::ap(1, 2).unwrap());
    let y = SetExpr::translate(x.clone(), 1);
    SetExpr::union(SetExpr::diff(x.clone(), y.clone()), SetExpr::diff(y, x))
}

#[test]
fn c4_gap_set_coincidences() {
    let t = Instant::now();
    let b = triangular_numbers();
    let tri: Vec<u64> = (1..).map(|j: u64| j * (j + 1) / 2).take_while(|&v| v <= 2000).collect();
    assert_eq!(densitylab_core::enumerate(&b, 2000, Budget::default()).unwrap(), tri);
    let mut violations = Vec::new();
    for l in (-C4_K..=C4_K).filter(|&l| l != 0) {
        let meet = SetExpr::inter(SetExpr::translate(b.clone(), l), b.clone());
        let hits = prefix_count(&meet, C4_N).unwrap();
        if hits > C4_MAX_HITS {
            violations.push((l, hits));
        }
    }
    let dt = t.elapsed();
    let ok = violations.is_empty() && dt < C4_LIMIT;
    verdict_line(
        "4",
        ok,
        &format!(
            "{} of {} shifts exceed {C4_MAX_HITS} coincidence(s) up to {C4_N}, first {:?}, {dt:?}",
            violations.len(),
            2 * C4_K,
            violations.first()
        ),
    );
    assert!(ok);
}

#[test]
fn c5a_omega_partition_axioms() {
    let rep = check_axioms(&omega(), &default_corpus(), C5_PAIRS);
    assert!(suite_line("5a", &rep));
}

#[test]
fn c5b_omega_partition_translation() {
    let rep = check_translation(&omega(), &default_corpus(), C5_SHIFTS, &Settings::default());
    assert!(suite_line("5b", &rep));
}

#[test]
fn c5c_omega_partition_richness() {
    let ev = IdealOracle::PieceFinite(Partition::Dyadic);
    let den = 1i64 << C5_RICHNESS_BITS;
    let mut bad = Vec::new();
    for p in 1..den {
        let target = r(p, den);
        let e = richness_witness_omega(&target).unwrap();
        let v = eval_omega_partition(&ev, Partition::Dyadic, &e, 20, Budget::default()).unwrap();
        if v != DensityValue::Exact(target.clone()) {
            bad.push(target);
        }
    }
    let ok = bad.is_empty();
    verdict_line("5c", ok, &format!("{} dyadic targets, {} mismatches", den - 1, bad.len()));
    assert!(ok);
}

#[test]
fn c5d_omega_partition_null_ideal() {
    let rep = check_null_ideal(&omega(), &IdealOracle::PieceFinite(Partition::Dyadic), &default_corpus());
    let c = rep.counts();
    let ok = c.fail == 0 && c.pass > 0;
    verdict_line("5d", ok, &format!("{}: {} decided, {} fail, {} undecided", rep.suite, c.pass, c.fail, c.unknown));
    assert!(ok);
}

fn canonical(n: usize) -> Vec<Branch> {
    let mut len = 1;
    while Branch::canonical_up_to(len).len() < n {
        len += 1;
    }
    Branch::canonical_up_to(len).into_iter().take(n).collect()
}

fn tad_suite(id: &str, scheme: IntervalScheme) -> Duration {
    let t = Instant::now();
    let fam = build_tad(scheme, canonical(C6_BRANCHES)).unwrap();
    let rep = tad_report(&fam, C6_SHIFTS, C6_ENUMERATION, C6_PROBE);
    let dt = t.elapsed();
    let pairs = rep.checks.iter().filter(|c| c.name == "pair").count();
    assert_eq!(pairs, C6_BRANCHES * (C6_BRANCHES - 1) / 2 * (2 * C6_SHIFTS as usize + 1));
    // Oracle: point-by-point scan of a few pairs against the certificate.
    for (i, j, k) in [(0, 1, 0), (5, 40, 7), (63, 2, -16), (17, 18, 16), (30, 61, -3)] {
        let cert = verify_tad_pair(&fam, i, j, k, C6_ENUMERATION).unwrap();
        let meet = SetExpr::inter(fam.member(i), SetExpr::translate(fam.member(j), k));
        let sup = cert.superset().unwrap();
        assert!((1..=C6_ENUMERATION).all(|n| !meet.member(n) || sup.member(n)), "{i} {j} {k}");
    }
    let ok = suite_line(id, &rep);
    println!("    {scheme}: {pairs} pair checks in {dt:?}");
    assert!(ok);
    dt
}

#[test]
fn c6_tad_family_certificates() {
    let geo = tad_suite("6 (geo(2,1))", IntervalScheme::dyadic());
    let tri = tad_suite("6 (tri)", IntervalScheme::Triangular);
    let ok = geo + tri < C6_LIMIT;
    verdict_line("6", ok, &format!("total {:?}", geo + tri));
    assert!(ok);
}

fn sup_family() -> (densitylab_core::families::TadFamily, Vec<Rational>) {
    let fam = build_tad(IntervalScheme::dyadic(), corpus_branches()).unwrap();
    let values = dyadic_values(fam.len());
    (fam, values)
}

#[test]
fn c7a_sup_tad_members() {
    let (fam, values) = sup_family();
    let mut ok = true;
    for i in 0..fam.len() {
        let v = eval_sup_tad(&fam, &values, &fam.member(i), 16, usize::MAX, Budget::default());
        ok &= v.value == DensityValue::Exact(values[i].clone());
    }
    verdict_line("7a", ok, &format!("{} members valued exactly", fam.len()));
    assert!(ok);
}

#[test]
fn c7b_sup_tad_finite_sets() {
    let (fam, values) = sup_family();
    let mut ok = true;
    for j in 1..=C7_FINITE_SETS {
        let e = SetExpr::finite((1..=j).map(|i| i * i * j).collect()).unwrap();
        let v = eval_sup_tad(&fam, &values, &e, 16, usize::MAX, Budget::default());
        ok &= v.value == DensityValue::Exact(r(0, 1));
    }
    verdict_line("7b", ok, &format!("{C7_FINITE_SETS} finite sets valued 0"));
    assert!(ok);
}

#[test]
fn c7c_sup_tad_transfer() {
    let (fam, values) = sup_family();
    let mut corpus: Vec<SetExpr> = (0..fam.len()).map(|i| fam.member(i)).collect();
    corpus.push(SetExpr::translate(fam.member(1), 3));
    corpus.push(SetExpr::union(fam.member(0), fam.member(2)));
    corpus.push(SetExpr::inter(fam.member(3), SetExpr::translate(fam.member(3), 1)));
    let ev = DensityEvaluator::SupTad { family: fam, values };
    let rep = check_translation(&ev, &corpus, C7_SHIFTS, &Settings::default());
    assert!(suite_line("7c", &rep));
}

#[test]
fn c8a_summable_block_set() {
    let ideal = IdealOracle::Summable(Weight::Harmonic);
    let v = ideal_member(&ideal, &a_star(), Budget::default());
    let half = r(1, 2);
    let ok = match &v {
        Verdict::NotIn(Certificate::Divergence { blocks, tail, .. }) => {
            !blocks.is_empty()
                && blocks.iter().all(|b| b.bound == half)
                && matches!(tail, DivergentTail::Uniform { floor, .. } if *floor == half)
        }
        _ => false,
    };
    let rechecked = recheck(&ideal, &a_star(), &v).is_ok();
    verdict_line("8a", ok && rechecked, "A★ not summable, every block bound 1/2");
    assert!(ok && rechecked);
}

#[test]
fn c8b_summable_boundary_points() {
    let ideal = IdealOracle::Summable(Weight::Harmonic);
    let pts = SetExpr::translate(SetExpr::codes("|0".parse().unwrap(), 1).unwrap(), 1);
    let want: Vec<u64> = (1..=19).map(|n| (1u64 << n) + 1).collect();
    assert_eq!(densitylab_core::enumerate(&pts, 1 << 19 | 1, Budget::default()).unwrap(), want);
    let v = ideal_member(&ideal, &pts, Budget::default());
    let ok = matches!(&v, Verdict::In(Certificate::Convergence { tail_upper: Some(_), .. }));
    let rechecked = recheck(&ideal, &pts, &v).is_ok();
    verdict_line("8b", ok && rechecked, "{2^n + 1} summable with a convergent tail");
    assert!(ok && rechecked);
}

#[test]
fn c9a_closed_form_matches_enumeration() {
    let mut mismatches = Vec::new();
    let corpus = default_corpus();
    for e in &corpus {
        for &n in &C9_POINTS {
            let closed = prefix_count_closed(e, n, Budget::default());
            let counted = prefix_count_enumerated(e, n, Budget::new(u64::MAX));
            let brute = (n <= 10_000).then(|| brute_count(e, 1, n));
            if closed.is_err() || closed != counted || brute.is_some_and(|b| Ok(b) != closed) {
                mismatches.push(format!("{e} at {n}: {closed:?} vs {counted:?}"));
            }
        }
    }
    let ok = mismatches.is_empty();
    verdict_line("9a", ok, &format!("{} expressions x {} points, {} mismatches", corpus.len(), C9_POINTS.len(), mismatches.len()));
    for m in mismatches.iter().take(5) {
        println!("    {m}");
    }
    assert!(ok);
}

#[test]
fn c9b_asymptotic_witnesses() {
    let mut ok = true;
    let mut worst = 0f64;
    for q in 1..=C9_MAX_Q {
        for p in 0..=q {
            let target = r(p, q);
            let e = density_witness_asymptotic(&target).unwrap();
            let n = q as u64 * C9_SCALE;
            let ratio = prefix_count(&e, n).unwrap() as f64 / n as f64;
            let err = (ratio - p as f64 / q as f64).abs();
            worst = worst.max(err);
            let exact = eval_classical(ClassicalKind::Asymptotic, &e, Budget::default(), 1 << 20);
            ok &= err <= C9_TOLERANCE && exact == DensityValue::Exact(target);
        }
    }
    verdict_line("9b", ok, &format!("q <= {C9_MAX_Q}: worst prefix error {worst:e}"));
    assert!(ok);
}
