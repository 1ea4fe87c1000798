//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use smachine_core::machine::Machine;
use smachine_core::{AdmissibleWord, GroupWord, Hardware, Letter, LetterId, LetterKind, SignedLetter};

pub fn tape(name: &str) -> LetterId {
    Letter::new(name, LetterKind::Tape).intern()
}

/// Reduction by repeatedly deleting the leftmost cancelling pair.
pub fn naive_reduce(w: &[SignedLetter]) -> Vec<SignedLetter> {
    let mut v = w.to_vec();
    loop {
        let hit = v.windows(2).position(|p| p[0].letter() == p[1].letter() && p[0].exponent() == -p[1].exponent());
        match hit {
            Some(i) => {
                v.drain(i..i + 2);
            }
            None => return v,
        }
    }
}

pub fn random_word<R: Rng>(rng: &mut R, letters: &[LetterId], max_len: usize) -> GroupWord {
    let len = rng.gen_range(0..=max_len);
    GroupWord::raw(
        (0..len)
            .map(|_| {
                let l = letters[rng.gen_range(0..letters.len())];
                if rng.gen_bool(0.5) {
                    l.pos()
                } else {
                    l.neg()
                }
            })
            .collect(),
    )
}

/// All freely reduced words of length ≤ `max_len` over `letters`.
pub fn reduced_words(letters: &[LetterId], max_len: usize) -> Vec<GroupWord> {
    let syms: Vec<SignedLetter> = letters.iter().flat_map(|l| [l.pos(), l.neg()]).collect();
    let mut out = vec![GroupWord::empty()];
    let mut layer = vec![Vec::<SignedLetter>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for &s in &syms {
                if w.last().is_some_and(|&l| l.letter() == s.letter() && l.exponent() == -s.exponent()) {
                    continue;
                }
                let mut v = w.clone();
                v.push(s);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(GroupWord::raw));
        layer = next;
    }
    out
}

/// Every admissible word of `hw` with each sector of length ≤ `max_sector`
/// (reduced, over the sector's alphabet) and total tape length ≤ `max_tape`.
pub fn admissible_words(hw: &Hardware, max_sector: usize, max_tape: usize) -> Vec<AdmissibleWord> {
    let mut acc: Vec<(Vec<SignedLetter>, Vec<GroupWord>, usize)> = hw
        .state_alphabet(0)
        .letters()
        .iter()
        .map(|q| (vec![q.pos()], Vec::new(), 0))
        .collect();
    for s in 0..hw.n_sectors() {
        let words = reduced_words(hw.tape_alphabet(s).letters(), max_sector);
        let mut next = Vec::new();
        for (states, sectors, used) in &acc {
            for w in &words {
                if used + w.len() > max_tape {
                    continue;
                }
                for q in hw.state_alphabet(s + 1).letters() {
                    let mut st = states.clone();
                    st.push(q.pos());
                    let mut se = sectors.clone();
                    se.push(w.clone());
                    next.push((st, se, used + w.len()));
                }
            }
        }
        acc = next;
    }
    acc.into_iter().map(|(st, se, _)| AdmissibleWord::new(st, se)).collect()
}

/// One sector alphabet, both copies of tape letters and three parts with
/// patterns that use inner sectors, tape parts and domains.
pub fn oracle_toy() -> Machine {
    Machine::from_json(
        r#"{
          "tape_alphabets": [["x.ot", "y.ot"], ["x.ot", "y.ot"]],
          "state_alphabets": [["q1.ot"], ["q2.ot", "r2.ot"], ["q3.ot", "r3.ot"]],
          "rules": [
            {"name": "shift", "substitutions": [
              {"pattern": "q1.ot", "replacement": "q1.ot"},
              {"pattern": "q2.ot", "replacement": "x.ot q2.ot y.ot^-1"},
              {"pattern": "q3.ot", "replacement": "q3.ot"}]},
            {"name": "swap", "substitutions": [
              {"pattern": "q1.ot x.ot q2.ot", "replacement": "q1.ot y.ot r2.ot"},
              {"pattern": "q3.ot", "replacement": "q3.ot"}],
             "domains": {"2": ["x.ot"]}},
            {"name": "close", "substitutions": [
              {"pattern": "y.ot q3.ot", "replacement": "x.ot r3.ot"}],
             "domains": {"1": []}}
          ]
        }"#,
    )
    .expect("toy machine loads")
}

pub fn grow() -> Machine {
    Machine::from_json(
        r#"{
          "tape_alphabets": [["a.gr"]],
          "state_alphabets": [["k1.gr"], ["k2.gr"]],
          "rules": [{"name": "grow", "substitutions": [
            {"pattern": "k1.gr", "replacement": "k1.gr"},
            {"pattern": "k2.gr", "replacement": "a.gr k2.gr"}]}]
        }"#,
    )
    .expect("grow loads")
}

/// A machine with `n_parts` single-letter K parts, one tape letter per
/// sector (two when `wide`), and `n_rules` rules. Rule 0 writes one letter
/// into every sector when `writes`, otherwise it changes nothing.
pub fn toy_s(tag: &str, n_parts: usize, n_rules: usize, wide: bool, writes: bool) -> Machine {
    let tapes: Vec<String> = (1..n_parts)
        .map(|i| {
            if wide {
                format!(r#"["a{i}.{tag}", "b{i}.{tag}"]"#)
            } else {
                format!(r#"["a{i}.{tag}"]"#)
            }
        })
        .collect();
    let states: Vec<String> = (1..=n_parts).map(|i| format!(r#"["k{i}.{tag}"]"#)).collect();
    let rules: Vec<String> = (0..n_rules)
        .map(|r| {
            let subs: Vec<String> = (1..=n_parts)
                .map(|i| {
                    let k = format!("k{i}.{tag}");
                    let rep = if i > 1 && (r == 0 && writes || r == 1) {
                        format!("a{}.{tag} {k}", i - 1)
                    } else {
                        k.clone()
                    };
                    format!(r#"{{"pattern": "{k}", "replacement": "{rep}"}}"#)
                })
                .collect();
            format!(r#"{{"name": "t{r}", "substitutions": [{}]}}"#, subs.join(","))
        })
        .collect();
    let json = format!(
        r#"{{"tape_alphabets": [{}], "state_alphabets": [{}], "rules": [{}]}}"#,
        tapes.join(","),
        states.join(","),
        rules.join(",")
    );
    Machine::from_json(&json).expect("toy S loads")
}

/// Definition scan: both ends agree and each position sits inside some
/// occurrence of a base.
pub fn covered_oracle(bases: &[Vec<u32>], w: &[u32]) -> bool {
    if w.is_empty() || w[0] != w[w.len() - 1] {
        return false;
    }
    (0..w.len()).all(|i| {
        bases.iter().any(|b| {
            (0..w.len()).any(|s| s <= i && i < s + b.len() && s + b.len() <= w.len() && w[s..s + b.len()] == b[..])
        })
    })
}

/// Every (start, end) pair whose subword is covered.
pub fn covered_spans(bases: &[Vec<u32>], w: &[u32]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..w.len() {
        for j in i + 1..=w.len() {
            if covered_oracle(bases, &w[i..j]) {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn narrow_oracle(bases: &[Vec<u32>], w: &[u32]) -> bool {
    covered_spans(bases, w).is_empty()
}

/// w = u·xvx with xvx covered. `whole`: no covered subword of w other than
/// that suffix; otherwise: u has no covered subword.
pub fn tight_oracle(bases: &[Vec<u32>], w: &[u32], whole: bool) -> bool {
    let n = w.len();
    (0..n).any(|s| {
        n - s >= 2
            && w[s] == w[n - 1]
            && covered_oracle(bases, &w[s..])
            && if whole {
                covered_spans(bases, w).iter().all(|&sp| sp == (s, n))
            } else {
                narrow_oracle(bases, &w[..s])
            }
    })
}

/// Base sets used by the predicate checks, as 0-based part lists.
pub fn base_sets() -> Vec<Vec<Vec<u32>>> {
    vec![
        vec![vec![0, 1, 0]],
        vec![vec![0, 1], vec![1, 0]],
        vec![vec![0], vec![1, 2, 1]],
        vec![vec![0, 0]],
        vec![vec![2]],
        vec![vec![0, 1, 2], vec![2, 1, 0], vec![1]],
    ]
}
