mod common;

use common::{naive_reduce, tape};
use proptest::prelude::*;
use smachine_core::{GroupWord, LetterId, SignedLetter};

fn letters() -> Vec<LetterId> {
    ["a.fg", "b.fg", "c.fg"].iter().map(|n| tape(n)).collect()
}

fn word() -> impl Strategy<Value = GroupWord> {
    prop::collection::vec((0usize..3, any::<bool>()), 0..24).prop_map(|v| {
        let ls = letters();
        GroupWord::raw(
            v.into_iter()
                .map(|(i, p)| if p { ls[i].pos() } else { ls[i].neg() })
                .collect(),
        )
    })
}

fn syms(w: &GroupWord) -> Vec<SignedLetter> {
    w.symbols().to_vec()
}

proptest! {
    #[test]
    fn reduce_agrees_with_pair_deletion(w in word()) {
        prop_assert_eq!(syms(&w.clone().reduce()), naive_reduce(w.symbols()));
    }

    #[test]
    fn reduce_is_idempotent(w in word()) {
        let r = w.reduce();
        prop_assert!(r.is_reduced());
        prop_assert_eq!(r.clone().reduce(), r);
    }

    #[test]
    fn word_times_inverse_is_trivial(w in word()) {
        prop_assert!(w.concat(&w.invert(), true).is_empty());
        prop_assert!(w.invert().concat(&w, true).is_empty());
    }

    #[test]
    fn invert_is_an_involution(w in word()) {
        prop_assert_eq!(w.invert().invert(), w.clone());
        prop_assert_eq!(w.invert().len(), w.len());
    }

    #[test]
    fn concat_is_associative(a in word(), b in word(), c in word()) {
        let left = a.concat(&b, true).concat(&c, true);
        let right = a.concat(&b.concat(&c, true), true);
        prop_assert_eq!(left, right);
    }

    #[test]
    fn inverse_of_product(a in word(), b in word()) {
        prop_assert_eq!(a.concat(&b, true).invert(), b.invert().concat(&a.invert(), true));
    }

    #[test]
    fn reduction_keeps_length_parity_and_degree(w in word()) {
        let r = w.clone().reduce();
        prop_assert_eq!(r.len() % 2, w.len() % 2);
        prop_assert!(r.len() <= w.len());
        prop_assert_eq!(r.algebraic_degree_sum(), w.algebraic_degree_sum());
    }

    #[test]
    fn display_parses_back(w in word()) {
        let r = w.reduce();
        let text = r.to_string();
        let ls = letters();
        let back = GroupWord::parse_with(&text, |t| ls.iter().copied().find(|l| l.token() == t)).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn push_reduced_matches_concat(a in word(), b in word()) {
        let mut x = a.clone().reduce();
        x.push_all_reduced(b.iter());
        prop_assert_eq!(x, a.concat(&b, true));
    }
}

#[test]
fn empty_word_prints_as_one() {
    assert_eq!(GroupWord::empty().to_string(), "1");
}
