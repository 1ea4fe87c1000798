mod common;

use proptest::prelude::*;
use smachine_core::adding::{base_alphabet, build_adding, lemma1_report, lower_bound, upper_bound, GEntry, GTable};
use smachine_core::machine::{run, Strategy, DEFAULT_VISITED_CAPACITY};
use smachine_core::{AdmissibleWord, GroupWord};

#[test]
fn window_and_length_checks_hold_up_to_ten() {
    let z = build_adding(&base_alphabet(&["a"])).unwrap();
    for n in 0..=10 {
        let report = z.verify_lemma1(&z.power_word(n)).unwrap();
        assert!(report.pass(), "{report:?}");
    }
}

#[test]
fn table_matches_closed_form_and_window() {
    let z = build_adding(&base_alphabet(&["a"])).unwrap();
    let ns: Vec<usize> = (0..=10).collect();
    let t = z.measure_many(&ns).unwrap();
    for n in ns {
        let g = t.get(n).unwrap();
        assert!(lower_bound(n) <= g && g <= upper_bound(n));
        // the counter visits every value of an n-digit register
        assert_eq!(g, 4 * (1 << n) - 3, "n = {n}");
    }
    assert!(t.window_violations().is_empty());
}

#[test]
fn g_depends_only_on_length() {
    let z = build_adding(&base_alphabet(&["a", "b", "c"])).unwrap();
    let hw = z.machine.hardware();
    for u in ["a.0 b.0", "c.0 c.0", "b.0 a.0", "a.0 a.0"] {
        let u = hw.parse_word(u).unwrap();
        let c = z.canonical_run(&u, None).unwrap().computation;
        assert_eq!(c.len(), 13, "u = {u}");
        // the final tape holds u again
        assert_eq!(c.last().sectors[0], u);
    }
}

#[test]
fn breadth_first_search_finds_no_shorter_route() {
    let z = build_adding(&base_alphabet(&["a"])).unwrap();
    let target = |w: &AdmissibleWord| z.is_target(w);
    for n in 0..=4 {
        let u = z.power_word(n);
        let det = z.canonical_run(&u, None).unwrap().computation;
        let start = z.start_word(&u, 1);
        let bfs = Strategy::SearchTarget {
            target: &target,
            rules: None,
            max_word_len: Some(start.len() + 2),
            capacity: DEFAULT_VISITED_CAPACITY,
        };
        let b = run(&z.machine, start, &bfs, det.len()).unwrap();
        assert_eq!(b.len(), det.len(), "n = {n}");
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(build_adding(&[]).is_err());
    let z = build_adding(&base_alphabet(&["a"])).unwrap();
    let hw = z.machine.hardware();
    assert!(z.canonical_run(&hw.parse_word("a.0^-1").unwrap(), None).is_err());
    assert!(z.canonical_run(&hw.parse_word("a.1").unwrap(), None).is_err());
}

#[test]
fn lemma1_report_flags_a_stretched_word() {
    let z = build_adding(&base_alphabet(&["a"])).unwrap();
    let mut c = z.canonical_run(&z.power_word(2), None).unwrap().computation;
    let mut long = c.last().clone();
    long.sectors[1] = GroupWord::raw(vec![z.letters.a0[0].pos(); 3]);
    let last = *c.steps.last().unwrap();
    c.words.pop();
    c.steps.pop();
    c.push(last, long);
    let r = lemma1_report(2, &c);
    assert!(!r.check("constant length").unwrap().pass);
    assert!(r.check("length ceiling").unwrap().pass);
}

#[test]
fn gtable_csv_round_trip_and_collisions() {
    let z = build_adding(&base_alphabet(&["a"])).unwrap();
    let t = z.measure_many(&[0, 1, 2, 3]).unwrap();
    let back = GTable::from_csv(&t.to_csv(false)).unwrap();
    for n in 0..=3 {
        assert_eq!(back.get(n), t.get(n));
    }
    let mut clash = t.clone();
    assert!(clash.insert(2, GEntry::bare(99)).is_err());
    clash.force(2, 99);
    assert_eq!(clash.window_violations(), vec![(2, 99)]);
    assert!(GTable::from_csv("n,g\n1,2\n").is_err());
}

#[test]
fn gg_tables_extend_on_demand() {
    let z = build_adding(&base_alphabet(&["a"])).unwrap();
    let mut t = GTable::default();
    z.measure_for_gg(&mut t, 1).unwrap();
    assert_eq!(t.get(0), Some(1));
    assert_eq!(t.get(1), Some(5));
    assert_eq!(t.get(5), Some(125));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every canonical run keeps word length fixed, stays in the window,
    /// and validates step by step.
    #[test]
    fn canonical_runs_are_valid(letters in prop::collection::vec(0usize..2, 0..6)) {
        let z = build_adding(&base_alphabet(&["a", "b"])).unwrap();
        let u = GroupWord::raw(letters.iter().map(|&i| z.letters.a0[i].pos()).collect());
        let c = z.canonical_run(&u, None).unwrap().computation;
        c.validate(&z.machine).unwrap();
        let r = lemma1_report(u.len(), &c);
        prop_assert!(r.pass());
        prop_assert!(c.words.iter().all(|w| w.len() == c.first().len()));
    }
}
