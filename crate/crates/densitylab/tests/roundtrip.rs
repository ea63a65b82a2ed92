use densitylab::parse_expr;
use densitylab_core::verify::default_corpus;
use densitylab_core::{Branch, IntervalScheme, SetExpr};
use proptest::prelude::*;

fn scheme() -> impl Strategy<Value = IntervalScheme> {
    prop_oneof![
        (2u64..6, 0u64..4).prop_map(|(b, c)| IntervalScheme::geometric(b, c).unwrap()),
        (2u32..5).prop_map(|e| IntervalScheme::polynomial(e).unwrap()),
        Just(IntervalScheme::Triangular),
        (1u64..9).prop_map(|c| IntervalScheme::linear(c).unwrap()),
    ]
}

fn expr() -> impl Strategy<Value = SetExpr> {
    let leaf = prop_oneof![
        Just(SetExpr::empty()),
        Just(SetExpr::full()),
        prop::collection::btree_set(1u64..u64::MAX, 0..5).prop_map(|s| SetExpr::finite(s.into_iter().collect()).unwrap()),
        (1u64..u64::MAX, 1u64..u64::MAX).prop_map(|(a, d)| SetExpr::ap(a, d).unwrap()),
        (prop::collection::vec(any::<bool>(), 0..4), prop::collection::vec(any::<bool>(), 1..4), 1u64..9)
            .prop_map(|(h, c, s)| SetExpr::codes(Branch::new(h, c).unwrap(), s).unwrap()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (scheme(), inner.clone()).prop_map(|(s, e)| SetExpr::blocks(s, e)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SetExpr::union(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SetExpr::inter(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SetExpr::diff(a, b)),
            inner.clone().prop_map(SetExpr::complement),
            (inner, any::<i64>()).prop_map(|(a, k)| SetExpr::translate(a, k)),
        ]
    })
}

#[test]
fn corpus_round_trips() {
    for e in default_corpus() {
        assert_eq!(parse_expr(&e.to_string()), Ok(e.clone()), "{e}");
    }
}

proptest! {
    #[test]
    fn parse_inverts_print(e in expr()) {
        prop_assert_eq!(parse_expr(&e.to_string()), Ok(e));
    }

    #[test]
    fn whitespace_is_ignored(e in expr()) {
        let spaced: String = e
            .to_string()
            .chars()
            .flat_map(|c| match c {
                '(' | ')' | ',' | '{' | '}' => vec!['\n', c, ' ', '\t'],
                _ => vec![c],
            })
            .collect();
        prop_assert_eq!(parse_expr(&spaced), Ok(e));
    }

    #[test]
    fn junk_never_panics(s in "[a-z(){},0-9| \"-]{0,40}") {
        if let Err(err) = parse_expr(&s) {
            prop_assert!(err.line >= 1 && err.column >= 1);
            prop_assert!(err.column <= s.chars().count() + 1);
        }
    }
}
