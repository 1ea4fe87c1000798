//! S-machine hardware, admissible words, rules and computations.
//!
//! Parts and sectors are 0-based in the API: a hardware with `n` tape
//! alphabets has parts `0..=n` and sector `i` sits between parts `i` and
//! `i + 1`. The JSON machine format numbers sectors from 1.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::word::{Alphabet, AlphabetRole, GroupWord, Letter, LetterId, LetterKind, SignedLetter, WordError};

/// Default cap on the number of distinct words a breadth-first search keeps.
pub const DEFAULT_VISITED_CAPACITY: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MachineError {
    #[error("hardware: {0}")]
    InvalidHardware(String),
    #[error("not admissible at symbol {position}: {reason}")]
    NotAdmissible { position: usize, reason: String },
    #[error("part indices ({i}, {j}) out of range for {parts} parts")]
    IndexOutOfRange { i: usize, j: usize, parts: usize },
    #[error("rule `{rule}` is not applicable")]
    NotApplicable { rule: String },
    #[error("rule `{rule}`: {reason}")]
    InvalidRule { rule: String, reason: String },
    #[error("trace step {index} does not re-apply")]
    InvalidTrace { index: usize },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("machine file: {0}")]
    Format(String),
}

/// The pair (Y, Q): `n` tape alphabets and `n + 1` state alphabets.
#[derive(Debug, Clone)]
pub struct Hardware {
    tape: Vec<Alphabet>,
    states: Vec<Alphabet>,
    part_of: HashMap<LetterId, usize>,
    tokens: HashMap<&'static str, LetterId>,
}

impl Hardware {
    pub fn new(tape: Vec<Vec<LetterId>>, states: Vec<Vec<LetterId>>) -> Result<Self, MachineError> {
        let bad = |m: String| MachineError::InvalidHardware(m);
        if states.len() != tape.len() + 1 {
            return Err(bad(format!(
                "{} tape alphabets need {} state alphabets, got {}",
                tape.len(),
                tape.len() + 1,
                states.len()
            )));
        }
        let mut part_of = HashMap::new();
        let mut tokens: HashMap<&'static str, LetterId> = HashMap::new();
        let claim = |l: LetterId, tokens: &mut HashMap<&'static str, LetterId>| -> Result<(), MachineError> {
            match tokens.insert(l.token(), l) {
                Some(prev) if prev != l => Err(bad(format!("two letters share the token `{}`", l.token()))),
                _ => Ok(()),
            }
        };
        for (i, q) in states.iter().enumerate() {
            for &l in q {
                if l.kind() != LetterKind::State {
                    return Err(bad(format!("`{l}` in Q_{} is not a state letter", i + 1)));
                }
                if let Some(j) = part_of.insert(l, i) {
                    if j != i {
                        return Err(bad(format!("`{l}` lies in both Q_{} and Q_{}", j + 1, i + 1)));
                    }
                }
                claim(l, &mut tokens)?;
            }
        }
        for (i, y) in tape.iter().enumerate() {
            for &l in y {
                if matches!(l.kind(), LetterKind::State | LetterKind::Rule | LetterKind::Kappa) {
                    return Err(bad(format!("`{l}` in Y_{} is not a tape letter", i + 1)));
                }
                if part_of.contains_key(&l) {
                    return Err(bad(format!("`{l}` is both a tape and a state letter")));
                }
                claim(l, &mut tokens)?;
            }
        }
        Ok(Hardware {
            tape: tape
                .into_iter()
                .enumerate()
                .map(|(i, y)| Alphabet::new(AlphabetRole::Tape(i), y))
                .collect(),
            states: states
                .into_iter()
                .enumerate()
                .map(|(i, q)| Alphabet::new(AlphabetRole::State(i), q))
                .collect(),
            part_of,
            tokens,
        })
    }

    pub fn n_sectors(&self) -> usize {
        self.tape.len()
    }

    pub fn n_parts(&self) -> usize {
        self.states.len()
    }

    pub fn tape_alphabet(&self, sector: usize) -> &Alphabet {
        &self.tape[sector]
    }

    pub fn state_alphabet(&self, part: usize) -> &Alphabet {
        &self.states[part]
    }

    pub fn tape_alphabets(&self) -> &[Alphabet] {
        &self.tape
    }

    pub fn state_alphabets(&self) -> &[Alphabet] {
        &self.states
    }

    pub fn part_of(&self, l: LetterId) -> Option<usize> {
        self.part_of.get(&l).copied()
    }

    /// All tape letters, each once, ordered by token.
    pub fn all_tape_letters(&self) -> Vec<LetterId> {
        let mut v: Vec<LetterId> = self.tape.iter().flat_map(|y| y.letters().iter().copied()).collect();
        v.sort_by(|a, b| a.token().cmp(b.token()));
        v.dedup();
        v
    }

    pub fn resolve(&self, token: &str) -> Option<LetterId> {
        self.tokens.get(token).copied()
    }

    pub fn parse_word(&self, text: &str) -> Result<GroupWord, MachineError> {
        Ok(GroupWord::parse_with(text, |t| self.resolve(t))?)
    }

    pub fn parse_admissible_str(&self, text: &str) -> Result<AdmissibleWord, MachineError> {
        self.parse_admissible(&self.parse_word(text)?)
    }

    /// Splits a flat word into its state letters and sectors, checking
    /// membership in Q_1 F(Y_1) Q_2 ... F(Y_n) Q_{n+1}.
    pub fn parse_admissible(&self, w: &GroupWord) -> Result<AdmissibleWord, MachineError> {
        let err = |position: usize, reason: String| MachineError::NotAdmissible { position, reason };
        let mut states = Vec::with_capacity(self.n_parts());
        let mut sectors = Vec::with_capacity(self.n_sectors());
        let mut cur = GroupWord::empty();
        let mut sector_start = 0;
        for (pos, s) in w.iter().enumerate() {
            let expected = states.len();
            if let Some(part) = self.part_of(s.letter()) {
                if part != expected {
                    return Err(err(pos, format!("expected Q_{}-letter, found `{s}` from Q_{}", expected + 1, part + 1)));
                }
                if expected > 0 {
                    let sector = std::mem::take(&mut cur);
                    if !sector.is_reduced() {
                        return Err(err(sector_start, format!("sector {} is not freely reduced", expected)));
                    }
                    sectors.push(sector.reduce());
                }
                states.push(s);
                sector_start = pos + 1;
            } else {
                if expected == 0 {
                    return Err(err(pos, "expected Q_1-letter".into()));
                }
                if expected == self.n_parts() {
                    return Err(err(pos, "letters after the final state letter".into()));
                }
                if !self.tape[expected - 1].contains(s.letter()) {
                    return Err(err(pos, format!("tape letter `{s}` outside Y_{}", expected)));
                }
                cur.push_raw(s);
            }
        }
        if states.len() != self.n_parts() {
            return Err(err(w.len(), format!("expected Q_{}-letter at end of word", states.len() + 1)));
        }
        Ok(AdmissibleWord { states, sectors })
    }

    /// Re-checks an already decomposed word.
    pub fn check_admissible(&self, w: &AdmissibleWord) -> Result<(), MachineError> {
        let back = self.parse_admissible(&w.flatten())?;
        if &back != w {
            return Err(MachineError::NotAdmissible {
                position: 0,
                reason: "decomposition does not match flat word".into(),
            });
        }
        Ok(())
    }
}

/// A word q_1 u_1 q_2 ... u_n q_{n+1} kept in decomposed form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdmissibleWord {
    pub states: Vec<SignedLetter>,
    pub sectors: Vec<GroupWord>,
}

impl AdmissibleWord {
    pub fn new(states: Vec<SignedLetter>, sectors: Vec<GroupWord>) -> Self {
        assert_eq!(states.len(), sectors.len() + 1);
        AdmissibleWord {
            states,
            sectors: sectors.into_iter().map(GroupWord::reduce).collect(),
        }
    }

    pub fn flatten(&self) -> GroupWord {
        let mut syms = Vec::with_capacity(self.len());
        self.extend_flat(&mut syms);
        GroupWord::raw(syms)
    }

    fn extend_flat(&self, out: &mut Vec<SignedLetter>) {
        for (i, q) in self.states.iter().enumerate() {
            out.push(*q);
            if let Some(u) = self.sectors.get(i) {
                out.extend(u.iter());
            }
        }
    }

    pub fn len(&self) -> usize {
        self.states.len() + self.a_length()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of tape letters.
    pub fn a_length(&self) -> usize {
        self.sectors.iter().map(GroupWord::len).sum()
    }

    /// The subword q_i u_i ... q_j (0-based parts, i < j).
    pub fn subword(&self, i: usize, j: usize) -> Result<GroupWord, MachineError> {
        if i >= j || j >= self.states.len() {
            return Err(MachineError::IndexOutOfRange {
                i,
                j,
                parts: self.states.len(),
            });
        }
        let mut syms = Vec::new();
        for k in i..=j {
            syms.push(self.states[k]);
            if k < j {
                syms.extend(self.sectors[k].iter());
            }
        }
        Ok(GroupWord::raw(syms))
    }

    /// True when the state letter `q` at `part` is immediately followed by
    /// the next state letter (empty sector), i.e. the word contains `q q_{part+1}`.
    pub fn has_state_at_right_end(&self, part: usize, q: SignedLetter) -> bool {
        self.states.get(part) == Some(&q) && self.sectors.get(part).is_some_and(GroupWord::is_empty)
    }
}

impl fmt::Display for AdmissibleWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.flatten(), f)
    }
}

/// Left side or right side of one substitution: an optional tape suffix of
/// the sector before `first_part`, the state letters of consecutive parts
/// with the full sectors between them, and an optional tape prefix of the
/// sector after the last part.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub first_part: usize,
    pub left: GroupWord,
    pub states: Vec<SignedLetter>,
    pub inner: Vec<GroupWord>,
    pub right: GroupWord,
}

impl Pattern {
    pub fn last_part(&self) -> usize {
        self.first_part + self.states.len() - 1
    }

    pub fn flatten(&self) -> GroupWord {
        let mut syms: Vec<SignedLetter> = self.left.iter().collect();
        for (k, q) in self.states.iter().enumerate() {
            syms.push(*q);
            if let Some(u) = self.inner.get(k) {
                syms.extend(u.iter());
            }
        }
        syms.extend(self.right.iter());
        GroupWord::raw(syms)
    }

    pub fn parse(hw: &Hardware, w: &GroupWord) -> Result<Pattern, MachineError> {
        let bad = |m: String| MachineError::Format(format!("pattern `{w}`: {m}"));
        let mut left = GroupWord::empty();
        let mut states: Vec<SignedLetter> = Vec::new();
        let mut inner: Vec<GroupWord> = Vec::new();
        let mut cur = GroupWord::empty();
        let mut first_part = 0;
        for s in w.iter() {
            match hw.part_of(s.letter()) {
                Some(part) => {
                    if states.is_empty() {
                        first_part = part;
                        left = std::mem::take(&mut cur);
                    } else {
                        if part != first_part + states.len() {
                            return Err(bad("state letters must come from consecutive parts".into()));
                        }
                        inner.push(std::mem::take(&mut cur));
                    }
                    states.push(s);
                }
                None => cur.push_raw(s),
            }
        }
        if states.is_empty() {
            return Err(bad("no state letter".into()));
        }
        let right = cur;
        let p = Pattern {
            first_part,
            left,
            states,
            inner,
            right,
        };
        p.check(hw).map_err(bad)?;
        Ok(p)
    }

    fn check(&self, hw: &Hardware) -> Result<(), String> {
        let sector_ok = |u: &GroupWord, sector: usize| -> Result<(), String> {
            if !u.is_reduced() {
                return Err(format!("tape word `{u}` is not reduced"));
            }
            match u.iter().find(|s| !hw.tape_alphabet(sector).contains(s.letter())) {
                Some(s) => Err(format!("`{s}` is not in Y_{}", sector + 1)),
                None => Ok(()),
            }
        };
        if self.last_part() >= hw.n_parts() {
            return Err("too many parts".into());
        }
        for (k, q) in self.states.iter().enumerate() {
            if hw.part_of(q.letter()) != Some(self.first_part + k) {
                return Err(format!("`{q}` is not in Q_{}", self.first_part + k + 1));
            }
        }
        if !self.left.is_empty() {
            if self.first_part == 0 {
                return Err("tape letters before Q_1".into());
            }
            sector_ok(&self.left, self.first_part - 1)?;
        }
        for (k, u) in self.inner.iter().enumerate() {
            sector_ok(u, self.first_part + k)?;
        }
        if !self.right.is_empty() {
            if self.last_part() == hw.n_sectors() {
                return Err("tape letters after the last part".into());
            }
            sector_ok(&self.right, self.last_part())?;
        }
        Ok(())
    }

    fn tape_letters_by_sector(&self) -> impl Iterator<Item = (usize, &GroupWord)> {
        let before = (!self.left.is_empty()).then(|| (self.first_part - 1, &self.left));
        let after = (!self.right.is_empty()).then(|| (self.last_part(), &self.right));
        before
            .into_iter()
            .chain(self.inner.iter().enumerate().map(move |(k, u)| (self.first_part + k, u)))
            .chain(after)
    }
}

/// One `U -> V` pair of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Substitution {
    pub from: Pattern,
    pub to: Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// An S-rule `[U_1 -> V_1, ..., U_m -> V_m]` with optional per-sector
/// domain alphabets. A sector absent from `domains` accepts its full Y_j;
/// an empty domain forces the sector to be empty. Parts not touched by any
/// substitution keep whatever state letter they hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SRule {
    pub name: String,
    pub subs: Vec<Substitution>,
    pub domains: BTreeMap<usize, Alphabet>,
    pub polarity: Polarity,
}

impl SRule {
    pub fn new(name: impl Into<String>, subs: Vec<Substitution>) -> Self {
        SRule {
            name: name.into(),
            subs,
            domains: BTreeMap::new(),
            polarity: Polarity::Positive,
        }
    }

    pub fn with_domain(mut self, sector: usize, letters: impl IntoIterator<Item = LetterId>) -> Self {
        self.domains.insert(sector, Alphabet::new(AlphabetRole::Tape(sector), letters));
        self
    }

    /// Parts mentioned by some substitution.
    pub fn touched_parts(&self) -> impl Iterator<Item = usize> + '_ {
        self.subs.iter().flat_map(|s| s.from.first_part..=s.from.last_part())
    }

    /// Type-checks the rule against a hardware.
    pub fn check(&self, hw: &Hardware) -> Result<(), MachineError> {
        let bad = |reason: String| MachineError::InvalidRule {
            rule: self.name.clone(),
            reason,
        };
        if self.name.is_empty() || self.name.chars().any(|c| c.is_whitespace() || c == '^') {
            return Err(bad("rule names must be non-empty tokens without `^`".into()));
        }
        let mut prev_last: Option<usize> = None;
        for sub in &self.subs {
            sub.from.check(hw).map_err(&bad)?;
            sub.to.check(hw).map_err(&bad)?;
            if sub.from.first_part != sub.to.first_part || sub.from.states.len() != sub.to.states.len() {
                return Err(bad(format!(
                    "`{}` and `{}` span different parts",
                    sub.from.flatten(),
                    sub.to.flatten()
                )));
            }
            if let Some(p) = prev_last {
                if sub.from.first_part <= p {
                    return Err(bad("substitutions overlap or are out of order".into()));
                }
            }
            prev_last = Some(sub.from.last_part());
        }
        for (&sector, dom) in &self.domains {
            if sector >= hw.n_sectors() {
                return Err(bad(format!("domain for missing sector {}", sector + 1)));
            }
            for sub in &self.subs {
                for (s, u) in sub.to.tape_letters_by_sector() {
                    if s == sector && u.iter().any(|x| !dom.contains(x.letter())) {
                        return Err(bad(format!("replacement writes outside Y_{}(rule)", sector + 1)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Swaps every U_i with V_i and flips the polarity. Domains are kept.
pub fn invert_rule(r: &SRule) -> SRule {
    let name = match r.name.strip_suffix("-inv") {
        Some(base) => base.to_string(),
        None => format!("{}-inv", r.name),
    };
    SRule {
        name,
        subs: r
            .subs
            .iter()
            .map(|s| Substitution {
                from: s.to.clone(),
                to: s.from.clone(),
            })
            .collect(),
        domains: r.domains.clone(),
        polarity: r.polarity.flip(),
    }
}

/// True iff every U_i has its state letters and inner sectors at its parts
/// and every restricted sector holds only letters of its domain. The tape
/// letters of U_i outside its state letters act by multiplication and need
/// not occur literally.
fn matches(r: &SRule, w: &AdmissibleWord) -> bool {
    let n = w.sectors.len();
    for sub in &r.subs {
        let u = &sub.from;
        if u.last_part() > n || w.states[u.first_part..=u.last_part()] != u.states[..] {
            return false;
        }
        for (k, inner) in u.inner.iter().enumerate() {
            if &w.sectors[u.first_part + k] != inner {
                return false;
            }
        }
        if (!u.left.is_empty() && u.first_part == 0) || (!u.right.is_empty() && u.last_part() >= n) {
            return false;
        }
    }
    r.domains.iter().all(|(&sector, dom)| {
        w.sectors
            .get(sector)
            .is_some_and(|s| s.iter().all(|x| dom.contains(x.letter())))
    })
}

pub fn applicable(r: &SRule, w: &AdmissibleWord) -> bool {
    matches(r, w)
}

/// Replaces all U_i by V_i at once: state letters and inner sectors are
/// overwritten, and the sector left of U_i is multiplied on the right by
/// left(U_i)⁻¹ left(V_i) (symmetrically on the right), then reduced.
pub fn apply_rule(r: &SRule, w: &AdmissibleWord) -> Result<AdmissibleWord, MachineError> {
    if !matches(r, w) {
        return Err(MachineError::NotApplicable { rule: r.name.clone() });
    }
    let n = w.sectors.len();
    let mut states = w.states.clone();
    let mut sectors = w.sectors.clone();
    for sub in &r.subs {
        let (u, v) = (&sub.from, &sub.to);
        states[v.first_part..=v.last_part()].copy_from_slice(&v.states);
        for (k, inner) in v.inner.iter().enumerate() {
            sectors[v.first_part + k] = inner.clone().reduce();
        }
        if v.first_part > 0 && !(u.left.is_empty() && v.left.is_empty()) {
            let s = &mut sectors[v.first_part - 1];
            s.push_all_reduced(u.left.invert().iter());
            s.push_all_reduced(v.left.iter());
        }
        if v.last_part() < n && !(u.right.is_empty() && v.right.is_empty()) {
            let s = &mut sectors[v.last_part()];
            let mut out = v.right.clone().reduce();
            out.push_all_reduced(u.right.invert().iter());
            out.push_all_reduced(s.iter());
            *s = out;
        }
    }
    Ok(AdmissibleWord { states, sectors })
}

/// Index into [`Machine::rules`]: positive rules first, then their inverses
/// in the same order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RuleId(pub usize);

/// Hardware plus positive rules and their generated inverses.
#[derive(Debug, Clone)]
pub struct Machine {
    hardware: Hardware,
    rules: Vec<SRule>,
    n_positive: usize,
    notes: Vec<String>,
}

impl Machine {
    /// Declared rules with negative polarity are stored through their
    /// positive inverse.
    pub fn new(hardware: Hardware, declared: Vec<SRule>) -> Result<Self, MachineError> {
        let mut positive = Vec::with_capacity(declared.len());
        let mut names = HashSet::new();
        for r in declared {
            r.check(&hardware)?;
            let r = match r.polarity {
                Polarity::Positive => r,
                Polarity::Negative => invert_rule(&r),
            };
            if !names.insert(r.name.clone()) {
                return Err(MachineError::InvalidRule {
                    rule: r.name,
                    reason: "duplicate rule name".into(),
                });
            }
            positive.push(r);
        }
        let n_positive = positive.len();
        let negative: Vec<SRule> = positive.iter().map(invert_rule).collect();
        positive.extend(negative);
        Ok(Machine {
            hardware,
            rules: positive,
            n_positive,
            notes: Vec::new(),
        })
    }

    pub fn with_notes(mut self, notes: Vec<String>) -> Self {
        self.notes = notes;
        self
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn hardware(&self) -> &Hardware {
        &self.hardware
    }

    pub fn rules(&self) -> &[SRule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &SRule {
        &self.rules[id.0]
    }

    pub fn n_positive(&self) -> usize {
        self.n_positive
    }

    pub fn positive_ids(&self) -> impl Iterator<Item = RuleId> {
        (0..self.n_positive).map(RuleId)
    }

    pub fn all_ids(&self) -> impl Iterator<Item = RuleId> {
        (0..self.rules.len()).map(RuleId)
    }

    pub fn positive_rules(&self) -> &[SRule] {
        &self.rules[..self.n_positive]
    }

    pub fn is_positive(&self, id: RuleId) -> bool {
        id.0 < self.n_positive
    }

    pub fn inverse_id(&self, id: RuleId) -> RuleId {
        RuleId((id.0 + self.n_positive) % (2 * self.n_positive))
    }

    /// The positive rule behind `id` (itself if positive).
    pub fn positive_of(&self, id: RuleId) -> RuleId {
        RuleId(id.0 % self.n_positive.max(1))
    }

    pub fn find(&self, name: &str) -> Option<RuleId> {
        self.rules.iter().position(|r| r.name == name).map(RuleId)
    }

    pub fn apply(&self, id: RuleId, w: &AdmissibleWord) -> Result<AdmissibleWord, MachineError> {
        let out = apply_rule(self.rule(id), w)?;
        debug_assert!(self.hardware.check_admissible(&out).is_ok(), "rule produced a non-admissible word");
        Ok(out)
    }
}

/// Why a run stopped without error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Halt {
    /// The stop predicate holds for the last word.
    Reached,
    /// No rule passed the strategy's filter.
    NoApplicableRule,
    /// Built by hand or truncated.
    Unspecified,
}

/// W_0 -> W_1 -> ... -> W_t together with the applied rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Computation {
    pub words: Vec<AdmissibleWord>,
    pub steps: Vec<RuleId>,
    pub halt: Halt,
}

impl Computation {
    pub fn start(w: AdmissibleWord) -> Self {
        Computation {
            words: vec![w],
            steps: Vec::new(),
            halt: Halt::Unspecified,
        }
    }

    /// Number of rule applications t.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn first(&self) -> &AdmissibleWord {
        &self.words[0]
    }

    pub fn last(&self) -> &AdmissibleWord {
        self.words.last().expect("computation has a start word")
    }

    pub fn push(&mut self, rule: RuleId, w: AdmissibleWord) {
        self.steps.push(rule);
        self.words.push(w);
    }

    /// Appends `other`, whose first word must equal our last.
    pub fn extend(&mut self, other: Computation) {
        assert_eq!(self.last(), other.first(), "computations do not chain");
        self.steps.extend(other.steps);
        self.words.extend(other.words.into_iter().skip(1));
        self.halt = other.halt;
    }

    pub fn truncated(&self, t: usize) -> Computation {
        let t = t.min(self.len());
        Computation {
            words: self.words[..=t].to_vec(),
            steps: self.steps[..t].to_vec(),
            halt: Halt::Unspecified,
        }
    }

    /// Checks words[i+1] = apply(steps[i], words[i]) for every i.
    pub fn validate(&self, m: &Machine) -> Result<(), MachineError> {
        if self.words.len() != self.steps.len() + 1 {
            return Err(MachineError::InvalidTrace { index: 0 });
        }
        for (i, &r) in self.steps.iter().enumerate() {
            match m.apply(r, &self.words[i]) {
                Ok(next) if next == self.words[i + 1] => {}
                _ => return Err(MachineError::InvalidTrace { index: i }),
            }
        }
        Ok(())
    }

    /// W_t -> ... -> W_0 with every rule inverted.
    pub fn reversed(&self, m: &Machine) -> Computation {
        Computation {
            words: self.words.iter().rev().cloned().collect(),
            steps: self.steps.iter().rev().map(|&r| m.inverse_id(r)).collect(),
            halt: Halt::Unspecified,
        }
    }
}

/// Extra filter on candidate steps of a deterministic run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepGuard {
    Any,
    LengthPreserving,
    NonIncreasing,
}

impl StepGuard {
    fn admits(self, before: &AdmissibleWord, after: &AdmissibleWord) -> bool {
        match self {
            StepGuard::Any => true,
            StepGuard::LengthPreserving => after.len() == before.len(),
            StepGuard::NonIncreasing => after.len() <= before.len(),
        }
    }
}

pub type Target<'a> = &'a (dyn Fn(&AdmissibleWord) -> bool + Sync);

pub enum Strategy<'a> {
    /// Repeatedly apply the first rule of `priority` that is applicable and
    /// passes `guard`; stop when `until` holds or nothing applies.
    Deterministic {
        priority: Vec<RuleId>,
        guard: StepGuard,
        until: Option<Target<'a>>,
    },
    /// Shortest path to a word satisfying `target`. `rules` defaults to all
    /// rules (both polarities); words longer than `max_word_len` are not
    /// explored.
    SearchTarget {
        target: Target<'a>,
        rules: Option<Vec<RuleId>>,
        max_word_len: Option<usize>,
        capacity: usize,
    },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("step budget exhausted after {} steps", .0.len())]
    BudgetExceeded(Box<Computation>),
    #[error("no computation reaches the target ({explored} words explored)")]
    NotFound { explored: usize },
    #[error(transparent)]
    Machine(#[from] MachineError),
}

/// Runs `m` from `start`. For the deterministic strategy `budget` caps the
/// number of steps; for the search it caps the path length.
pub fn run(m: &Machine, start: AdmissibleWord, strategy: &Strategy<'_>, budget: usize) -> Result<Computation, RunError> {
    m.hardware().check_admissible(&start)?;
    match strategy {
        Strategy::Deterministic { priority, guard, until } => run_deterministic(m, start, priority, *guard, *until, budget),
        Strategy::SearchTarget {
            target,
            rules,
            max_word_len,
            capacity,
        } => {
            let all: Vec<RuleId>;
            let rules = match rules {
                Some(r) => r.as_slice(),
                None => {
                    all = m.all_ids().collect();
                    &all
                }
            };
            search(m, start, *target, rules, *max_word_len, *capacity, budget)
        }
    }
}

fn run_deterministic(
    m: &Machine,
    start: AdmissibleWord,
    priority: &[RuleId],
    guard: StepGuard,
    until: Option<Target<'_>>,
    budget: usize,
) -> Result<Computation, RunError> {
    let mut comp = Computation::start(start);
    loop {
        let cur = comp.last();
        if until.is_some_and(|t| t(cur)) {
            comp.halt = Halt::Reached;
            return Ok(comp);
        }
        let next = priority.iter().find_map(|&id| {
            let r = m.rule(id);
            if !applicable(r, cur) {
                return None;
            }
            let out = m.apply(id, cur).ok()?;
            guard.admits(cur, &out).then_some((id, out))
        });
        let Some((id, out)) = next else {
            comp.halt = Halt::NoApplicableRule;
            return Ok(comp);
        };
        if comp.len() >= budget {
            return Err(RunError::BudgetExceeded(Box::new(comp)));
        }
        comp.push(id, out);
    }
}

fn search(
    m: &Machine,
    start: AdmissibleWord,
    target: Target<'_>,
    rules: &[RuleId],
    max_word_len: Option<usize>,
    capacity: usize,
    budget: usize,
) -> Result<Computation, RunError> {
    struct Node {
        word: AdmissibleWord,
        parent: usize,
        rule: RuleId,
        depth: usize,
    }
    if target(&start) {
        let mut c = Computation::start(start);
        c.halt = Halt::Reached;
        return Ok(c);
    }
    let mut visited: HashSet<GroupWord> = HashSet::new();
    visited.insert(start.flatten());
    let mut nodes = vec![Node {
        word: start,
        parent: usize::MAX,
        rule: RuleId(0),
        depth: 0,
    }];
    let mut queue = VecDeque::from([0usize]);
    let mut depth_cut = false;
    while let Some(idx) = queue.pop_front() {
        if nodes[idx].depth >= budget {
            depth_cut = true;
            continue;
        }
        for &id in rules {
            let Ok(next) = m.apply(id, &nodes[idx].word) else {
                continue;
            };
            if max_word_len.is_some_and(|cap| next.len() > cap) {
                continue;
            }
            if !visited.insert(next.flatten()) {
                continue;
            }
            let hit = target(&next);
            let depth = nodes[idx].depth + 1;
            nodes.push(Node {
                word: next,
                parent: idx,
                rule: id,
                depth,
            });
            let new_idx = nodes.len() - 1;
            if hit {
                let mut path = Vec::new();
                let mut at = new_idx;
                while at != 0 {
                    path.push(at);
                    at = nodes[at].parent;
                }
                let mut comp = Computation::start(nodes[0].word.clone());
                for &i in path.iter().rev() {
                    comp.push(nodes[i].rule, nodes[i].word.clone());
                }
                comp.halt = Halt::Reached;
                return Ok(comp);
            }
            if visited.len() >= capacity {
                return Err(RunError::BudgetExceeded(Box::new(Computation::start(nodes[0].word.clone()))));
            }
            queue.push_back(new_idx);
        }
    }
    if depth_cut {
        Err(RunError::BudgetExceeded(Box::new(Computation::start(nodes[0].word.clone()))))
    } else {
        Err(RunError::NotFound { explored: visited.len() })
    }
}

// ---------------------------------------------------------------------------
// JSON machine format

/// A letter in a machine file: a bare token (`name[.copy][@sector]`, kind
/// taken from the list it appears in) or an explicit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LetterSpec {
    Token(String),
    Full { token: String, kind: LetterKind },
}

impl LetterSpec {
    fn to_letter(&self, default_kind: LetterKind) -> Result<Letter, MachineError> {
        let (tok, kind) = match self {
            LetterSpec::Token(t) => (t.as_str(), default_kind),
            LetterSpec::Full { token, kind } => (token.as_str(), *kind),
        };
        parse_letter_token(tok, kind)
    }

    fn of(l: LetterId, default_kind: LetterKind) -> Self {
        if l.kind() == default_kind {
            LetterSpec::Token(l.token().to_string())
        } else {
            LetterSpec::Full {
                token: l.token().to_string(),
                kind: l.kind(),
            }
        }
    }
}

/// Inverse of [`Letter::token`].
pub fn parse_letter_token(tok: &str, kind: LetterKind) -> Result<Letter, MachineError> {
    if tok.is_empty() || tok.chars().any(char::is_whitespace) || tok.contains('^') || tok == "1" {
        return Err(MachineError::Format(format!("bad letter token `{tok}`")));
    }
    let (rest, sector) = match tok.rsplit_once('@') {
        Some((rest, sec)) => {
            let sec: u32 = sec
                .parse()
                .map_err(|_| MachineError::Format(format!("bad sector tag in `{tok}`")))?;
            (rest, Some(sec))
        }
        None => (tok, None),
    };
    let (name, copy) = match rest.split_once('.') {
        Some((n, c)) => (n, Some(c.to_string())),
        None => (rest, None),
    };
    Ok(Letter {
        name: name.to_string(),
        kind,
        sector,
        copy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionFile {
    pub pattern: String,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFile {
    pub name: String,
    pub substitutions: Vec<SubstitutionFile>,
    /// 1-based sector number -> permitted letters.
    #[serde(default)]
    pub domains: BTreeMap<String, Vec<String>>,
    #[serde(default = "positive")]
    pub polarity: Polarity,
}

fn positive() -> Polarity {
    Polarity::Positive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineFile {
    pub tape_alphabets: Vec<Vec<LetterSpec>>,
    pub state_alphabets: Vec<Vec<LetterSpec>>,
    pub rules: Vec<RuleFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MachineFile {
    pub fn build(&self) -> Result<Machine, MachineError> {
        let intern_all = |v: &Vec<Vec<LetterSpec>>, kind| -> Result<Vec<Vec<LetterId>>, MachineError> {
            v.iter()
                .map(|a| a.iter().map(|s| Ok(s.to_letter(kind)?.intern())).collect())
                .collect()
        };
        let hw = Hardware::new(
            intern_all(&self.tape_alphabets, LetterKind::Tape)?,
            intern_all(&self.state_alphabets, LetterKind::State)?,
        )?;
        let mut rules = Vec::with_capacity(self.rules.len());
        for rf in &self.rules {
            let subs = rf
                .substitutions
                .iter()
                .map(|s| {
                    Ok(Substitution {
                        from: Pattern::parse(&hw, &hw.parse_word(&s.pattern)?)?,
                        to: Pattern::parse(&hw, &hw.parse_word(&s.replacement)?)?,
                    })
                })
                .collect::<Result<Vec<_>, MachineError>>()?;
            let mut rule = SRule::new(rf.name.clone(), subs);
            rule.polarity = rf.polarity;
            for (sec, letters) in &rf.domains {
                let sector: usize = sec
                    .parse::<usize>()
                    .ok()
                    .and_then(|s| s.checked_sub(1))
                    .ok_or_else(|| MachineError::Format(format!("bad domain sector `{sec}`")))?;
                let ids = letters
                    .iter()
                    .map(|t| hw.resolve(t).ok_or_else(|| WordError::UnknownLetter(t.clone()).into()))
                    .collect::<Result<Vec<_>, MachineError>>()?;
                rule = rule.with_domain(sector, ids);
            }
            rules.push(rule);
        }
        Ok(Machine::new(hw, rules)?.with_notes(self.notes.clone()))
    }

    pub fn from_machine(m: &Machine) -> Self {
        let hw = m.hardware();
        let dump = |v: &[Alphabet], kind| -> Vec<Vec<LetterSpec>> {
            v.iter()
                .map(|a| a.sorted_by_token().into_iter().map(|l| LetterSpec::of(l, kind)).collect())
                .collect()
        };
        let rules = m
            .positive_rules()
            .iter()
            .map(|r| RuleFile {
                name: r.name.clone(),
                substitutions: r
                    .subs
                    .iter()
                    .map(|s| SubstitutionFile {
                        pattern: s.from.flatten().to_string(),
                        replacement: s.to.flatten().to_string(),
                    })
                    .collect(),
                domains: r
                    .domains
                    .iter()
                    .map(|(s, a)| {
                        (
                            (s + 1).to_string(),
                            a.sorted_by_token().into_iter().map(|l| l.token().to_string()).collect(),
                        )
                    })
                    .collect(),
                polarity: r.polarity,
            })
            .collect();
        MachineFile {
            tape_alphabets: dump(hw.tape_alphabets(), LetterKind::Tape),
            state_alphabets: dump(hw.state_alphabets(), LetterKind::State),
            rules,
            notes: m.notes().to_vec(),
        }
    }
}

impl Machine {
    pub fn from_json(text: &str) -> Result<Machine, MachineError> {
        let file: MachineFile = serde_json::from_str(text).map_err(|e| MachineError::Format(e.to_string()))?;
        file.build()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MachineFile::from_machine(self)).expect("machine file serializes")
    }
}

/// One line of a computation trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: usize,
    pub rule: Option<String>,
    pub word: String,
}

impl Computation {
    pub fn trace_records(&self, m: &Machine) -> Vec<TraceRecord> {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| TraceRecord {
                index: i,
                rule: i.checked_sub(1).map(|k| m.rule(self.steps[k]).name.clone()),
                word: w.to_string(),
            })
            .collect()
    }

    /// Rebuilds a computation from trace records, re-validating every step.
    pub fn from_records(m: &Machine, records: &[TraceRecord]) -> Result<Computation, MachineError> {
        let first = records
            .first()
            .ok_or_else(|| MachineError::Format("empty trace".into()))?;
        let mut comp = Computation::start(m.hardware().parse_admissible_str(&first.word)?);
        for rec in &records[1..] {
            let name = rec
                .rule
                .as_deref()
                .ok_or_else(|| MachineError::Format(format!("record {} has no rule", rec.index)))?;
            let id = m
                .find(name)
                .ok_or_else(|| MachineError::Format(format!("unknown rule `{name}`")))?;
            comp.push(id, m.hardware().parse_admissible_str(&rec.word)?);
        }
        comp.validate(m)?;
        Ok(comp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Q_1 = {L}, Y_1 = {a}, Q_2 = {R}
    fn tiny() -> (Hardware, LetterId, LetterId, LetterId) {
        let l = Letter::new("L", LetterKind::State).with_copy("mt").intern();
        let r = Letter::new("R", LetterKind::State).with_copy("mt").intern();
        let a = Letter::new("a", LetterKind::Tape).with_copy("mt").intern();
        (Hardware::new(vec![vec![a]], vec![vec![l], vec![r]]).unwrap(), l, a, r)
    }

    #[test]
    fn parse_admissible_examples() {
        let (hw, l, a, r) = tiny();
        let w = hw.parse_admissible_str("L.mt a.mt R.mt").unwrap();
        assert_eq!(w.states, vec![l.pos(), r.pos()]);
        assert_eq!(w.sectors[0].symbols(), &[a.pos()]);
        match hw.parse_admissible_str("a.mt L.mt R.mt") {
            Err(MachineError::NotAdmissible { position: 0, reason }) => assert!(reason.contains("Q_1")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(hw.parse_admissible_str("L.mt a.mt a.mt^-1 R.mt").is_err());
        assert!(hw.parse_admissible_str("L.mt R.mt a.mt").is_err());
        assert!(hw.parse_admissible_str("L.mt a.mt").is_err());
    }

    #[test]
    fn hardware_rejects_overlaps() {
        let (_, l, a, r) = tiny();
        assert!(Hardware::new(vec![vec![a]], vec![vec![l], vec![l, r]]).is_err());
        assert!(Hardware::new(vec![vec![l]], vec![vec![l], vec![r]]).is_err());
        assert!(Hardware::new(vec![vec![a]], vec![vec![l]]).is_err());
    }

    #[test]
    fn subword_cases() {
        let (hw, ..) = tiny();
        let w = hw.parse_admissible_str("L.mt a.mt R.mt").unwrap();
        assert_eq!(w.subword(0, 1).unwrap(), w.flatten());
        assert!(matches!(w.subword(1, 1), Err(MachineError::IndexOutOfRange { .. })));
        assert!(w.subword(0, 2).is_err());
    }

    #[test]
    fn identity_rule_fixes_word() {
        let (hw, ..) = tiny();
        let pat = Pattern::parse(&hw, &hw.parse_word("L.mt").unwrap()).unwrap();
        let rule = SRule::new(
            "id",
            vec![Substitution {
                from: pat.clone(),
                to: pat,
            }],
        );
        rule.check(&hw).unwrap();
        let w = hw.parse_admissible_str("L.mt a.mt a.mt R.mt").unwrap();
        assert_eq!(apply_rule(&rule, &w).unwrap(), w);
    }

    #[test]
    fn tape_parts_act_by_multiplication() {
        let (hw, ..) = tiny();
        let p = |s: &str| Pattern::parse(&hw, &hw.parse_word(s).unwrap()).unwrap();
        let rule = SRule::new(
            "both",
            vec![
                Substitution {
                    from: p("L.mt a.mt"),
                    to: p("L.mt"),
                },
                Substitution {
                    from: p("a.mt R.mt"),
                    to: p("R.mt"),
                },
            ],
        );
        let one = hw.parse_admissible_str("L.mt a.mt R.mt").unwrap();
        let two = hw.parse_admissible_str("L.mt a.mt a.mt R.mt").unwrap();
        assert!(applicable(&rule, &one));
        assert_eq!(apply_rule(&rule, &one).unwrap(), hw.parse_admissible_str("L.mt a.mt^-1 R.mt").unwrap());
        assert_eq!(apply_rule(&rule, &two).unwrap().a_length(), 0);
        let back = apply_rule(&invert_rule(&rule), &apply_rule(&rule, &one).unwrap()).unwrap();
        assert_eq!(back, one);
    }

    #[test]
    fn invert_rule_is_involution() {
        let (hw, ..) = tiny();
        let p = |s: &str| Pattern::parse(&hw, &hw.parse_word(s).unwrap()).unwrap();
        let r = SRule::new(
            "grow",
            vec![Substitution {
                from: p("R.mt"),
                to: p("a.mt R.mt"),
            }],
        );
        let inv = invert_rule(&r);
        assert_eq!(inv.polarity, Polarity::Negative);
        assert_eq!(invert_rule(&inv), r);
    }

    #[test]
    fn budget_zero_gives_empty_partial() {
        let (hw, ..) = tiny();
        let p = |s: &str| Pattern::parse(&hw, &hw.parse_word(s).unwrap()).unwrap();
        let grow = SRule::new(
            "grow",
            vec![Substitution {
                from: p("R.mt"),
                to: p("a.mt R.mt"),
            }],
        );
        let m = Machine::new(hw.clone(), vec![grow]).unwrap();
        let start = hw.parse_admissible_str("L.mt R.mt").unwrap();
        let strat = Strategy::Deterministic {
            priority: vec![RuleId(0)],
            guard: StepGuard::Any,
            until: None,
        };
        match run(&m, start.clone(), &strat, 0) {
            Err(RunError::BudgetExceeded(partial)) => assert_eq!(partial.len(), 0),
            other => panic!("unexpected {other:?}"),
        }
        let c = match run(&m, start, &strat, 3) {
            Err(RunError::BudgetExceeded(partial)) => *partial,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(c.len(), 3);
        c.validate(&m).unwrap();
        c.reversed(&m).validate(&m).unwrap();
    }

    #[test]
    fn json_round_trip() {
        let (hw, ..) = tiny();
        let p = |s: &str| Pattern::parse(&hw, &hw.parse_word(s).unwrap()).unwrap();
        let a = hw.resolve("a.mt").unwrap();
        let grow = SRule::new(
            "grow",
            vec![Substitution {
                from: p("R.mt"),
                to: p("a.mt R.mt"),
            }],
        )
        .with_domain(0, [a]);
        let m = Machine::new(hw, vec![grow]).unwrap();
        let back = Machine::from_json(&m.to_json()).unwrap();
        assert_eq!(back.positive_rules(), m.positive_rules());
        assert!(Machine::from_json("{ not json").is_err());
    }
}
