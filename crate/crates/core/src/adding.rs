//! The adding machine Z(A) and its length function g.
//!
//! Z(A) has parts P_1 = {L}, P_2 = {p(1), p(2), p(3)}, P_3 = {R}, sector 1
//! over A_0 ∪ A_1 and sector 2 over A_0. Read as a binary counter, sector 1
//! holds the digits (a_0 = 0, a_1 = 1, least significant next to the
//! p-letter) and sector 2 is the scratch area used while a carry moves left.
//! Starting from `L u p(1) R` with `u` positive over A_0 the machine counts
//! up to all ones, overflows into p(3) and sweeps the digits back, which
//! takes 4·2^|u| − 3 steps.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{BoundReport, Check};
use crate::machine::{
    run, AdmissibleWord, Computation, Hardware, Machine, MachineError, Pattern, RuleId, RunError, SRule, StepGuard,
    Strategy, Substitution, DEFAULT_VISITED_CAPACITY,
};
use crate::word::{GroupWord, Letter, LetterId, LetterKind, SignedLetter};

pub const MAX_ALPHABET: usize = 26;

#[derive(Debug, Error)]
pub enum AddingError {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("`{0}` is not a positive word over A_0")]
    NotPositiveOverA0(String),
    #[error("g({n}) = {g} leaves the window [{lower}, {upper}]")]
    BoundViolation { n: usize, g: u64, lower: u64, upper: u64 },
    #[error("g({0}) was not measured")]
    GTableMiss(usize),
    #[error("conflicting measurements for g({n}): {old} vs {new}")]
    Collision { n: usize, old: u64, new: u64 },
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

/// Rule families of Z(A), in deterministic priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    R1,
    R12,
    R2,
    R21,
    R13,
    R3,
}

/// The letters a copy of Z(A) is written in. Standalone machines use
/// [`ZLetters::standalone`]; the composition maps them onto its own parts.
#[derive(Debug, Clone)]
pub struct ZLetters {
    pub l: LetterId,
    pub p: [LetterId; 3],
    pub r: LetterId,
    pub a0: Vec<LetterId>,
    pub a1: Vec<LetterId>,
}

/// `a` ↦ its copy in A_j: copy tag `j` (appended to an existing tag), and
/// the sector tag replaced when one is given.
pub fn copy_letter(base: LetterId, j: u8, sector: Option<u32>) -> LetterId {
    let b = base.letter();
    let copy = match &b.copy {
        Some(c) => format!("{c}.{j}"),
        None => j.to_string(),
    };
    Letter {
        name: b.name.clone(),
        kind: LetterKind::Tape,
        sector: sector.or(b.sector),
        copy: Some(copy),
    }
    .intern()
}

impl ZLetters {
    pub fn standalone(base: &[LetterId]) -> Self {
        let st = |n: &str| Letter::new(n, LetterKind::State).intern();
        ZLetters {
            l: st("L"),
            p: [st("p(1)"), st("p(2)"), st("p(3)")],
            r: st("R"),
            a0: base.iter().map(|&a| copy_letter(a, 0, None)).collect(),
            a1: base.iter().map(|&a| copy_letter(a, 1, None)).collect(),
        }
    }

    fn sector1(&self) -> Vec<LetterId> {
        self.a0.iter().chain(&self.a1).copied().collect()
    }
}

/// The 4|A| + 2 positive rules of Z(A) with L at part `base`, the p-letter
/// at `base + 1` and R at `base + 2`. Domains are written out for both
/// sectors of every rule; where no restriction is printed for a family the
/// full sector alphabet is used.
pub fn adding_rules(z: &ZLetters, base: usize, base_names: &[String]) -> Vec<(Family, SRule)> {
    let pat = |part: usize, left: Vec<SignedLetter>, q: LetterId, right: Vec<SignedLetter>| Pattern {
        first_part: part,
        left: GroupWord::raw(left),
        states: vec![q.pos()],
        inner: Vec::new(),
        right: GroupWord::raw(right),
    };
    let fixed = |q: LetterId, part: usize| Substitution {
        from: pat(part, vec![], q, vec![]),
        to: pat(part, vec![], q, vec![]),
    };
    let mid = |from: Pattern, to: Pattern| Substitution { from, to };
    let rule = |name: String, m: Substitution, dom1: Vec<LetterId>, dom2: Vec<LetterId>| {
        SRule::new(name, vec![fixed(z.l, base), m, fixed(z.r, base + 2)])
            .with_domain(base, dom1)
            .with_domain(base + 1, dom2)
    };
    let p = |i: usize| z.p[i - 1];
    let pm = base + 1;
    let full1 = z.sector1();
    let full2 = z.a0.clone();
    let mut out = Vec::with_capacity(4 * z.a0.len() + 2);
    for (k, name) in base_names.iter().enumerate() {
        let (a0, a1) = (z.a0[k], z.a1[k]);
        out.push((
            Family::R1,
            rule(
                format!("r1({name})"),
                mid(pat(pm, vec![], p(1), vec![]), pat(pm, vec![a1.neg()], p(1), vec![a0.pos()])),
                full1.clone(),
                full2.clone(),
            ),
        ));
    }
    for (k, name) in base_names.iter().enumerate() {
        let (a0, a1) = (z.a0[k], z.a1[k]);
        out.push((
            Family::R12,
            rule(
                format!("r12({name})"),
                mid(pat(pm, vec![], p(1), vec![]), pat(pm, vec![a0.neg(), a1.pos()], p(2), vec![])),
                full1.clone(),
                full2.clone(),
            ),
        ));
    }
    for (k, name) in base_names.iter().enumerate() {
        let a0 = z.a0[k];
        out.push((
            Family::R2,
            rule(
                format!("r2({name})"),
                mid(pat(pm, vec![], p(2), vec![]), pat(pm, vec![a0.pos()], p(2), vec![a0.neg()])),
                full1.clone(),
                full2.clone(),
            ),
        ));
    }
    out.push((
        Family::R21,
        rule(
            "r21".into(),
            mid(pat(pm, vec![], p(2), vec![]), pat(pm, vec![], p(1), vec![])),
            full1.clone(),
            vec![],
        ),
    ));
    out.push((
        Family::R13,
        rule(
            "r13".into(),
            mid(pat(pm, vec![], p(1), vec![]), pat(pm, vec![], p(3), vec![])),
            vec![],
            full2.clone(),
        ),
    ));
    for (k, name) in base_names.iter().enumerate() {
        let a0 = z.a0[k];
        out.push((
            Family::R3,
            rule(
                format!("r3({name})"),
                mid(pat(pm, vec![], p(3), vec![]), pat(pm, vec![a0.pos()], p(3), vec![a0.neg()])),
                z.a0.clone(),
                z.a0.clone(),
            ),
        ));
    }
    out
}

/// Z(A) together with handles on its letters.
#[derive(Debug, Clone)]
pub struct AddingMachine {
    pub machine: Machine,
    pub letters: ZLetters,
    pub base: Vec<LetterId>,
    pub families: Vec<Family>,
}

pub const DOMAIN_NOTE: &str = "domains of r1(a), r12(a), r2(a) are not restricted in the construction; \
    they are recorded here as the full sectors Y_1 = A_0 ∪ A_1 and Y_2 = A_0";

/// Builds Z(A) from a base alphabet of 1..=26 tape letters.
pub fn build_adding(base: &[LetterId]) -> Result<AddingMachine, AddingError> {
    if base.is_empty() || base.len() > MAX_ALPHABET {
        return Err(AddingError::InvalidAlphabet(format!(
            "need 1..={MAX_ALPHABET} letters, got {}",
            base.len()
        )));
    }
    let mut seen = base.to_vec();
    seen.sort();
    seen.dedup();
    if seen.len() != base.len() {
        return Err(AddingError::InvalidAlphabet("repeated letter".into()));
    }
    if let Some(bad) = base.iter().find(|l| l.kind() != LetterKind::Tape) {
        return Err(AddingError::InvalidAlphabet(format!("`{bad}` is not a tape letter")));
    }
    let z = ZLetters::standalone(base);
    let hw = Hardware::new(vec![z.sector1(), z.a0.clone()], vec![vec![z.l], z.p.to_vec(), vec![z.r]])?;
    let names: Vec<String> = base.iter().map(|l| l.token().to_string()).collect();
    let (families, rules): (Vec<Family>, Vec<SRule>) = adding_rules(&z, 0, &names).into_iter().unzip();
    let machine = Machine::new(hw, rules)?.with_notes(vec![DOMAIN_NOTE.to_string()]);
    Ok(AddingMachine {
        machine,
        letters: z,
        base: base.to_vec(),
        families,
    })
}

/// Convenience: interns tape letters named by the given strings.
pub fn base_alphabet(names: &[&str]) -> Vec<LetterId> {
    names.iter().map(|n| Letter::new(*n, LetterKind::Tape).intern()).collect()
}

pub fn lower_bound(n: usize) -> u64 {
    1u64.checked_shl(n as u32).unwrap_or(u64::MAX)
}

pub fn upper_bound(n: usize) -> u64 {
    lower_bound(n).saturating_mul(6)
}

/// A finished canonical computation and how it was found.
#[derive(Debug, Clone)]
pub struct CanonicalRun {
    pub computation: Computation,
    pub fallback: bool,
}

impl CanonicalRun {
    pub fn strategy(&self) -> &'static str {
        if self.fallback {
            "bfs-fallback"
        } else {
            "det"
        }
    }
}

impl AddingMachine {
    pub fn start_word(&self, u: &GroupWord, p: usize) -> AdmissibleWord {
        AdmissibleWord::new(
            vec![self.letters.l.pos(), self.letters.p[p - 1].pos(), self.letters.r.pos()],
            vec![u.clone(), GroupWord::empty()],
        )
    }

    /// `a_0^n` for the first base letter.
    pub fn power_word(&self, n: usize) -> GroupWord {
        GroupWord::raw(vec![self.letters.a0[0].pos(); n])
    }

    pub fn parse(&self, text: &str) -> Result<AdmissibleWord, MachineError> {
        self.machine.hardware().parse_admissible_str(text)
    }

    /// The word contains `p(3) R` and every tape letter is from A_0^±.
    pub fn is_target(&self, w: &AdmissibleWord) -> bool {
        w.has_state_at_right_end(1, self.letters.p[2].pos())
            && w.sectors.iter().flat_map(|s| s.iter()).all(|s| self.letters.a0.contains(&s.letter()))
    }

    pub fn default_budget(n: usize) -> usize {
        8usize.saturating_mul(1usize.checked_shl(n as u32).unwrap_or(usize::MAX))
    }

    pub fn priority(&self) -> Vec<RuleId> {
        self.machine.positive_ids().collect()
    }

    /// Runs from `L u p(1) R` to a word containing `p(3) R` with the
    /// deterministic strategy over the positive rules, keeping word length
    /// fixed. Falls back to breadth-first search if that stalls.
    pub fn canonical_run(&self, u: &GroupWord, budget: Option<usize>) -> Result<CanonicalRun, AddingError> {
        if !u.is_positive() || u.iter().any(|s| !self.letters.a0.contains(&s.letter())) {
            return Err(AddingError::NotPositiveOverA0(u.to_string()));
        }
        let budget = budget.unwrap_or_else(|| Self::default_budget(u.len()));
        let start = self.start_word(u, 1);
        let target = |w: &AdmissibleWord| self.is_target(w);
        let det = Strategy::Deterministic {
            priority: self.priority(),
            guard: StepGuard::LengthPreserving,
            until: Some(&target),
        };
        let comp = run(&self.machine, start.clone(), &det, budget)?;
        if self.is_target(comp.last()) {
            return Ok(CanonicalRun {
                computation: comp,
                fallback: false,
            });
        }
        let bfs = Strategy::SearchTarget {
            target: &target,
            rules: None,
            max_word_len: Some(start.len()),
            capacity: DEFAULT_VISITED_CAPACITY,
        };
        let comp = run(&self.machine, start, &bfs, budget)?;
        Ok(CanonicalRun {
            computation: comp,
            fallback: true,
        })
    }

    /// g(n) from the canonical run on `a_0^n`, checked against [2^n, 6·2^n].
    pub fn measure_g(&self, n: usize) -> Result<GEntry, AddingError> {
        let u = self.power_word(n);
        let t0 = Instant::now();
        let run = self.canonical_run(&u, None)?;
        let entry = GEntry {
            g: run.computation.len() as u64,
            strategy: run.strategy().to_string(),
            u: u.to_string(),
            wall_time_ms: t0.elapsed().as_millis() as u64,
        };
        let (lower, upper) = (lower_bound(n), upper_bound(n));
        if entry.g < lower || entry.g > upper {
            return Err(AddingError::BoundViolation {
                n,
                g: entry.g,
                lower,
                upper,
            });
        }
        Ok(entry)
    }

    /// Measures every n in `ns` in parallel.
    pub fn measure_many(&self, ns: &[usize]) -> Result<GTable, AddingError> {
        let entries: Vec<(usize, GEntry)> = ns
            .par_iter()
            .map(|&n| self.measure_g(n).map(|e| (n, e)))
            .collect::<Result<_, _>>()?;
        let mut table = GTable::default();
        for (n, e) in entries {
            table.insert(n, e)?;
        }
        Ok(table)
    }

    /// Extends `table` with g(r−1), g(r), g(g(r−1)) and g(g(r)).
    pub fn measure_for_gg(&self, table: &mut GTable, r: usize) -> Result<(), AddingError> {
        for n in [r.saturating_sub(1), r] {
            if table.get(n).is_none() {
                table.insert(n, self.measure_g(n)?)?;
            }
        }
        let outer: Vec<usize> = [table.require(r.saturating_sub(1))?, table.require(r)?]
            .into_iter()
            .map(|g| g as usize)
            .filter(|&n| table.get(n).is_none())
            .collect();
        let more = self.measure_many(&outer)?;
        table.merge(more)
    }

    /// Canonical run on `u` plus the three Lemma-1 checks.
    pub fn verify_lemma1(&self, u: &GroupWord) -> Result<BoundReport, AddingError> {
        let run = self.canonical_run(u, None)?;
        let mut report = lemma1_report(u.len(), &run.computation);
        if run.fallback {
            report.notes.push("deterministic strategy stalled; breadth-first fallback used".into());
        }
        report.notes.push(DOMAIN_NOTE.into());
        Ok(report)
    }
}

/// Per-word length ceiling, length window and constant word length for a
/// computation started on a word with |u| = n.
pub fn lemma1_report(n: usize, c: &Computation) -> BoundReport {
    let first = c.first().len();
    let last = c.last().len();
    let ceiling = first.max(last);
    let over = c.words.iter().position(|w| w.len() > ceiling);
    let t = c.len() as u64;
    let (lower, upper) = (lower_bound(n), upper_bound(n));
    let uneven = c.words.iter().position(|w| w.len() != first);
    let mut report = BoundReport::new(format!("lemma1 |u|={n}"));
    report.checks.push(Check {
        name: "length ceiling".into(),
        pass: over.is_none(),
        detail: match over {
            None => format!("all |W_i| <= {ceiling}"),
            Some(i) => format!("|W_{i}| = {} > {ceiling}", c.words[i].len()),
        },
    });
    report.checks.push(Check {
        name: "length window".into(),
        pass: lower <= t && t <= upper,
        detail: format!("t = {t}, window [{lower}, {upper}]"),
    });
    report.checks.push(Check {
        name: "constant length".into(),
        pass: uneven.is_none(),
        detail: match uneven {
            None => format!("all |W_i| = {first}"),
            Some(i) => format!("|W_{i}| = {} != {first}", c.words[i].len()),
        },
    });
    report
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GEntry {
    pub g: u64,
    pub strategy: String,
    pub u: String,
    pub wall_time_ms: u64,
}

impl GEntry {
    pub fn bare(g: u64) -> Self {
        GEntry {
            g,
            strategy: "given".into(),
            u: String::new(),
            wall_time_ms: 0,
        }
    }
}

/// Measured values n ↦ g(n).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GTable {
    entries: BTreeMap<usize, GEntry>,
}

impl GTable {
    pub fn insert(&mut self, n: usize, e: GEntry) -> Result<(), AddingError> {
        match self.entries.get(&n) {
            Some(old) if old.g != e.g => Err(AddingError::Collision { n, old: old.g, new: e.g }),
            Some(_) => Ok(()),
            None => {
                self.entries.insert(n, e);
                Ok(())
            }
        }
    }

    /// Overwrites without the collision check.
    pub fn force(&mut self, n: usize, g: u64) {
        self.entries.insert(n, GEntry::bare(g));
    }

    pub fn merge(&mut self, other: GTable) -> Result<(), AddingError> {
        for (n, e) in other.entries {
            self.insert(n, e)?;
        }
        Ok(())
    }

    pub fn get(&self, n: usize) -> Option<u64> {
        self.entries.get(&n).map(|e| e.g)
    }

    pub fn require(&self, n: usize) -> Result<u64, AddingError> {
        self.get(n).ok_or(AddingError::GTableMiss(n))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &GEntry)> {
        self.entries.iter().map(|(n, e)| (*n, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries outside [2^n, 6·2^n].
    pub fn window_violations(&self) -> Vec<(usize, u64)> {
        self.entries()
            .filter(|(n, e)| e.g < lower_bound(*n) || e.g > upper_bound(*n))
            .map(|(n, e)| (n, e.g))
            .collect()
    }

    pub const CSV_HEADER: &'static str = "n,g(n),lower,upper,strategy,wall_time_ms";

    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (n, e) in self.entries() {
            let ms = if with_timing { e.wall_time_ms } else { 0 };
            s.push_str(&format!(
                "{n},{},{},{},{},{ms}\n",
                e.g,
                lower_bound(n),
                upper_bound(n),
                e.strategy
            ));
        }
        s
    }

    /// Reads the CSV written by [`GTable::to_csv`]; `#` lines are skipped.
    pub fn from_csv(text: &str) -> Result<GTable, String> {
        let mut table = GTable::default();
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == Self::CSV_HEADER => {}
            other => return Err(format!("unexpected g-table header {other:?}")),
        }
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(format!("bad g-table row `{line}`"));
            }
            let n: usize = cols[0].parse().map_err(|_| format!("bad n in `{line}`"))?;
            let g: u64 = cols[1].parse().map_err(|_| format!("bad g in `{line}`"))?;
            let e = GEntry {
                g,
                strategy: cols[4].to_string(),
                u: String::new(),
                wall_time_ms: cols[5].parse().unwrap_or(0),
            };
            table.insert(n, e).map_err(|e| e.to_string())?;
        }
        Ok(table)
    }
}
