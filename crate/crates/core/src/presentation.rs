//! Group presentations of S-machines: transition, fixing, auxiliary and hub
//! relators, the hub word K(u), the configuration word σ(c), relator traces
//! and a breadth-first area oracle for tiny presentations.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::machine::{AdmissibleWord, Hardware, Machine, MachineError, RuleId};
use crate::word::{GroupWord, Letter, LetterId, LetterKind, SignedLetter};

/// Longest word the area oracle will handle.
pub const AREA_MAX_LEN: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PresentationError {
    #[error("W_0 is not admissible: {0}")]
    NotAdmissible(MachineError),
    #[error("u contains the kappa letter `{0}`")]
    KappaCollision(String),
    #[error("relator index {index} out of range ({len} relators)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("unrecognized command shape: {0}")]
    UnrecognizedShape(String),
    #[error("two generators share the token `{0}`")]
    TokenCollision(String),
    #[error("N must be at least 1")]
    ZeroN,
    #[error(transparent)]
    Machine(#[from] MachineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelatorTag {
    Transition,
    Fixing,
    Auxiliary,
    Hub,
    /// Relators of a presentation given by hand.
    Given,
}

impl RelatorTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RelatorTag::Transition => "transition",
            RelatorTag::Fixing => "fixing",
            RelatorTag::Auxiliary => "auxiliary",
            RelatorTag::Hub => "hub",
            RelatorTag::Given => "given",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relator {
    pub word: GroupWord,
    pub tag: RelatorTag,
    /// The positive rule a transition, fixing or auxiliary relator comes from.
    pub rule: Option<String>,
}

/// ⟨generators | relators⟩ with relators stored cyclically reduced in
/// their least rotation and without repeats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPresentation {
    pub generators: Vec<LetterId>,
    pub relators: Vec<Relator>,
    canon: HashMap<Vec<SignedLetter>, usize>,
}

#[derive(Debug, Clone)]
pub struct HubParams {
    pub n: usize,
    pub w0: AdmissibleWord,
}

/// The letters α, ω, δ when the caller wants them among the generators.
#[derive(Debug, Clone, Copy)]
pub struct Specials {
    pub alpha: LetterId,
    pub omega: LetterId,
    pub delta: LetterId,
}

impl Specials {
    pub fn standard() -> Self {
        let sp = |n: &str| Letter::new(n, LetterKind::Special).intern();
        Specials {
            alpha: sp("alpha"),
            omega: sp("omega"),
            delta: sp("delta"),
        }
    }

    fn all(&self) -> [LetterId; 3] {
        [self.alpha, self.omega, self.delta]
    }
}

fn sym_cmp(a: &[SignedLetter], b: &[SignedLetter]) -> Ordering {
    let key = |s: &SignedLetter| (s.letter().token(), s.exponent());
    a.iter().map(key).cmp(b.iter().map(key))
}

/// Cyclic reduction of a freely reduced word.
pub fn cyclically_reduce(w: &GroupWord) -> GroupWord {
    let s = w.clone().reduce().into_symbols();
    let (mut i, mut j) = (0, s.len());
    while j > i + 1 && s[i].cancels(s[j - 1]) {
        i += 1;
        j -= 1;
    }
    GroupWord::raw(s[i..j].to_vec())
}

/// The lexicographically least rotation (by token, then exponent).
pub fn least_rotation(w: &GroupWord) -> GroupWord {
    let s = w.symbols();
    let n = s.len();
    let mut best: Vec<SignedLetter> = s.to_vec();
    for k in 1..n {
        let rot: Vec<SignedLetter> = s[k..].iter().chain(&s[..k]).copied().collect();
        if sym_cmp(&rot, &best) == Ordering::Less {
            best = rot;
        }
    }
    GroupWord::raw(best)
}

fn canonical(w: &GroupWord) -> GroupWord {
    least_rotation(&cyclically_reduce(w))
}

fn rotate(s: &[SignedLetter], k: usize) -> Vec<SignedLetter> {
    s[k..].iter().chain(&s[..k]).copied().collect()
}

pub fn kappa(j: usize) -> LetterId {
    Letter::new(format!("kappa{j}"), LetterKind::Kappa).intern()
}

pub fn rule_letter(name: &str) -> LetterId {
    Letter::new(name, LetterKind::Rule).intern()
}

impl GroupPresentation {
    fn empty(generators: Vec<LetterId>) -> Self {
        GroupPresentation {
            generators,
            relators: Vec::new(),
            canon: HashMap::new(),
        }
    }

    /// Adds a relator unless an equal one (up to rotation) is present.
    /// Returns its index.
    fn push(&mut self, w: GroupWord, tag: RelatorTag, rule: Option<String>) -> usize {
        let word = canonical(&w);
        if let Some(&i) = self.canon.get(word.symbols()) {
            return i;
        }
        self.canon.insert(word.symbols().to_vec(), self.relators.len());
        self.relators.push(Relator { word, tag, rule });
        self.relators.len() - 1
    }

    /// A presentation given directly by its relators.
    pub fn from_relators(relators: impl IntoIterator<Item = GroupWord>) -> Self {
        let relators: Vec<GroupWord> = relators.into_iter().collect();
        let mut gens: Vec<LetterId> = relators.iter().flat_map(|r| r.iter().map(|s| s.letter())).collect();
        gens.sort_by_key(|l| l.token());
        gens.dedup();
        let mut p = GroupPresentation::empty(gens);
        for r in relators {
            p.push(r, RelatorTag::Given, None);
        }
        p
    }

    pub fn count(&self, tag: RelatorTag) -> usize {
        self.relators.iter().filter(|r| r.tag == tag).count()
    }

    /// Index of the relator equal to `w` up to rotation, if any.
    pub fn find(&self, w: &GroupWord) -> Option<usize> {
        self.canon.get(canonical(w).symbols()).copied()
    }

    /// Plain-text form: a generator line, a tag-count line, then one
    /// relator per line.
    pub fn to_text(&self) -> String {
        let mut s = String::from("! generators:");
        for g in &self.generators {
            s.push(' ');
            s.push_str(g.token());
        }
        s.push_str("\n! tags:");
        for tag in [
            RelatorTag::Transition,
            RelatorTag::Fixing,
            RelatorTag::Auxiliary,
            RelatorTag::Hub,
            RelatorTag::Given,
        ] {
            let c = self.count(tag);
            if c > 0 || tag != RelatorTag::Given {
                s.push_str(&format!(" {}={}", tag.as_str(), c));
            }
        }
        s.push('\n');
        for r in &self.relators {
            s.push_str(&r.word.to_string());
            s.push('\n');
        }
        s
    }
}

/// The unreduced hub word
/// (u⁻¹κ_1 u κ_2 ... u⁻¹κ_{2N−1} u κ_{2N})(κ_{2N} u⁻¹κ_{2N−1} u ... κ_2 u⁻¹κ_1 u)⁻¹.
pub fn hub_word_unreduced(u: &GroupWord, n: usize) -> Result<GroupWord, PresentationError> {
    if n == 0 {
        return Err(PresentationError::ZeroN);
    }
    if let Some(k) = u.iter().find(|s| s.letter().kind() == LetterKind::Kappa) {
        return Err(PresentationError::KappaCollision(k.to_string()));
    }
    let ui = u.invert();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for j in 1..=n {
        left.extend(ui.iter());
        left.push(kappa(2 * j - 1).pos());
        left.extend(u.iter());
        left.push(kappa(2 * j).pos());
    }
    for j in (1..=n).rev() {
        right.push(kappa(2 * j).pos());
        right.extend(ui.iter());
        right.push(kappa(2 * j - 1).pos());
        right.extend(u.iter());
    }
    left.extend(GroupWord::raw(right).invert().iter());
    Ok(GroupWord::raw(left))
}

/// K(u), freely reduced.
pub fn hub_word(u: &GroupWord, n: usize) -> Result<GroupWord, PresentationError> {
    Ok(hub_word_unreduced(u, n)?.reduce())
}

/// Builds the presentation of `m` with hub relator K(W_0).
pub fn generate_presentation(
    m: &Machine,
    hub: &HubParams,
    specials: Option<Specials>,
) -> Result<GroupPresentation, PresentationError> {
    let hw = m.hardware();
    hw.check_admissible(&hub.w0).map_err(PresentationError::NotAdmissible)?;
    let rule_letters: Vec<LetterId> = m.positive_rules().iter().map(|r| rule_letter(&r.name)).collect();
    let tape = hw.all_tape_letters();
    let extra: Vec<LetterId> = specials.map(|s| s.all().to_vec()).unwrap_or_default();

    let mut gens = Vec::new();
    for q in hw.state_alphabets() {
        gens.extend(q.sorted_by_token());
    }
    gens.extend(&tape);
    gens.extend(&extra);
    gens.extend((1..=2 * hub.n).map(kappa));
    gens.extend(&rule_letters);
    let mut seen = HashSet::new();
    for g in &gens {
        if !seen.insert(g.token()) {
            return Err(PresentationError::TokenCollision(g.token().to_string()));
        }
    }

    let mut p = GroupPresentation::empty(gens);
    for (r, &t) in m.positive_rules().iter().zip(&rule_letters) {
        for sub in &r.subs {
            let w = GroupWord::raw(
                std::iter::once(t.neg())
                    .chain(sub.from.flatten().iter())
                    .chain([t.pos()])
                    .chain(sub.to.flatten().invert().iter())
                    .collect(),
            );
            p.push(w, RelatorTag::Transition, Some(r.name.clone()));
        }
    }
    for (r, &t) in m.positive_rules().iter().zip(&rule_letters) {
        let touched: HashSet<usize> = r.touched_parts().collect();
        for part in (0..hw.n_parts()).filter(|j| !touched.contains(j)) {
            for q in hw.state_alphabet(part).sorted_by_token() {
                let w = GroupWord::raw(vec![t.neg(), q.pos(), t.pos(), q.neg()]);
                p.push(w, RelatorTag::Fixing, Some(r.name.clone()));
            }
        }
    }
    for (r, &t) in m.positive_rules().iter().zip(&rule_letters) {
        for &x in tape.iter().chain(&extra) {
            let w = GroupWord::raw(vec![t.pos(), x.pos(), t.neg(), x.neg()]);
            p.push(w, RelatorTag::Auxiliary, Some(r.name.clone()));
        }
    }
    p.push(hub_word(&hub.w0.flatten(), hub.n)?, RelatorTag::Hub, None);
    Ok(p)
}

// ---------------------------------------------------------------------------
// Relator traces

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub relator: usize,
    pub exponent: i8,
    pub conjugator: GroupWord,
}

/// start · Π x_i⁻¹ r_i^{±1} x_i should freely equal end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelatorTrace {
    pub start: GroupWord,
    pub steps: Vec<TraceStep>,
    pub end: GroupWord,
}

impl RelatorTrace {
    /// The product start · Π x_i⁻¹ r_i^{±1} x_i, reduced.
    pub fn product(&self, p: &GroupPresentation) -> Result<GroupWord, PresentationError> {
        let mut acc = self.start.clone().reduce();
        for st in &self.steps {
            let r = p.relators.get(st.relator).ok_or(PresentationError::IndexOutOfRange {
                index: st.relator,
                len: p.relators.len(),
            })?;
            let r = if st.exponent < 0 { r.word.invert() } else { r.word.clone() };
            acc.push_all_reduced(st.conjugator.invert().iter());
            acc.push_all_reduced(r.iter());
            acc.push_all_reduced(st.conjugator.iter());
        }
        Ok(acc)
    }
}

pub fn verify_trace(p: &GroupPresentation, t: &RelatorTrace) -> Result<bool, PresentationError> {
    Ok(t.product(p)? == t.end.clone().reduce())
}

/// Finds a relator r, a sign e and a word d with ρ = d⁻¹ r^e d, where ρ is
/// a rotation of r^e.
fn match_cell(p: &GroupPresentation, rho: &GroupWord) -> Option<(usize, i8, GroupWord)> {
    for (e, cand) in [(1i8, rho.clone()), (-1i8, rho.invert())] {
        let Some(idx) = p.find(&cand) else { continue };
        let r = &p.relators[idx].word;
        let re = if e < 0 { r.invert() } else { r.clone() };
        let s = re.symbols();
        for k in 0..s.len().max(1) {
            if rotate(s, k.min(s.len())) == rho.symbols() {
                return Some((idx, e, GroupWord::raw(s[..k].to_vec())));
            }
        }
    }
    None
}

/// The trace for one rule application W → W′: τ^ε moves from the right end
/// of W to the left end of W′ through one cell per substitution, untouched
/// state letter and tape letter outside the substitutions. `start` is
/// flat(W)·τ^ε and `end` is τ^ε·flat(W′), where τ is the letter of the
/// positive rule behind `rule` and ε its sign.
pub fn rule_application_trace(
    p: &GroupPresentation,
    m: &Machine,
    rule: RuleId,
    w: &AdmissibleWord,
) -> Result<RelatorTrace, PresentationError> {
    let r = m.rule(rule);
    let out = m.apply(rule, w)?;
    let t = rule_letter(&m.rule(m.positive_of(rule)).name);
    let tau = if m.is_positive(rule) { t.pos() } else { t.neg() };
    let flat = w.flatten();
    let syms = flat.symbols();

    // Offsets of state letters in flat(W).
    let mut state_pos = Vec::with_capacity(w.states.len());
    let mut at = 0;
    for (i, _) in w.states.iter().enumerate() {
        state_pos.push(at);
        at += 1 + w.sectors.get(i).map_or(0, GroupWord::len);
    }
    // flat(W) freely equals a product of blocks B with replacements C: one
    // per substitution (B = U_i, C = V_i, with the tape letters of U_i
    // cancelled against the neighbouring sectors) and one per remaining
    // letter (C = B).
    let single = |s: SignedLetter| (GroupWord::raw(vec![s]), GroupWord::raw(vec![s]));
    let mut subs: Vec<_> = r.subs.iter().collect();
    subs.sort_by_key(|s| s.from.first_part);
    let mut blocks: Vec<(GroupWord, GroupWord)> = Vec::new();
    let mut pos = 0;
    for s in subs {
        let a = state_pos[s.from.first_part];
        let b = state_pos[s.from.last_part()] + 1;
        blocks.extend(syms[pos..a].iter().copied().map(single));
        blocks.extend(s.from.left.invert().iter().map(single));
        blocks.push((s.from.flatten(), s.to.flatten()));
        blocks.extend(s.from.right.invert().iter().map(single));
        pos = b;
    }
    blocks.extend(syms[pos..].iter().copied().map(single));

    let mut suffix = GroupWord::empty();
    let mut steps = Vec::with_capacity(blocks.len());
    for (bw, c) in blocks.into_iter().rev() {
        let rho = GroupWord::raw(
            std::iter::once(tau.inverse())
                .chain(bw.invert().iter())
                .chain([tau])
                .chain(c.iter())
                .collect(),
        );
        let (idx, e, d) = match_cell(p, &rho).ok_or_else(|| {
            PresentationError::AlphabetMismatch(format!("no relator matches the cell `{rho}`"))
        })?;
        steps.push(TraceStep {
            relator: idx,
            exponent: e,
            conjugator: d.concat(&suffix, false),
        });
        suffix = c.concat(&suffix, false);
    }
    let mut start = flat.clone();
    start.push_raw(tau);
    let mut end = GroupWord::raw(vec![tau]);
    end.push_all_reduced(out.flatten().iter());
    Ok(RelatorTrace { start, steps, end })
}

// ---------------------------------------------------------------------------
// Area oracle

fn reduce_into(out: &mut Vec<SignedLetter>, it: impl IntoIterator<Item = SignedLetter>) {
    for s in it {
        if out.last().is_some_and(|&l| l.cancels(s)) {
            out.pop();
        } else {
            out.push(s);
        }
    }
}

/// Least number of relator insertions (any rotation of any r^{±1}, at any
/// position, followed by free reduction) taking `w` to the empty word
/// through words of length at most `max_len`. `None` if the caps are hit.
pub fn brute_force_area(p: &GroupPresentation, w: &GroupWord, max_len: usize, max_area: usize) -> Option<usize> {
    let start = w.clone().reduce().into_symbols();
    if max_len > AREA_MAX_LEN || start.len() > max_len {
        return None;
    }
    if start.is_empty() {
        return Some(0);
    }
    let mut cells: Vec<Vec<SignedLetter>> = Vec::new();
    let mut seen_cells = HashSet::new();
    for r in &p.relators {
        for word in [r.word.clone(), r.word.invert()] {
            let s = word.symbols();
            for k in 0..s.len() {
                let rot = rotate(s, k);
                if seen_cells.insert(rot.clone()) {
                    cells.push(rot);
                }
            }
        }
    }
    let mut visited: HashSet<Vec<SignedLetter>> = HashSet::new();
    visited.insert(start.clone());
    let mut queue = VecDeque::from([(start, 0usize)]);
    let mut buf = Vec::with_capacity(2 * AREA_MAX_LEN);
    while let Some((cur, depth)) = queue.pop_front() {
        if depth >= max_area {
            continue;
        }
        for cell in &cells {
            if cell.len() > cur.len() + max_len {
                continue;
            }
            for i in 0..=cur.len() {
                buf.clear();
                reduce_into(&mut buf, cur[..i].iter().copied());
                reduce_into(&mut buf, cell.iter().copied());
                reduce_into(&mut buf, cur[i..].iter().copied());
                if buf.len() > max_len {
                    continue;
                }
                if buf.is_empty() {
                    return Some(depth + 1);
                }
                if visited.insert(buf.clone()) {
                    queue.push_back((buf.clone(), depth + 1));
                }
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// σ(c) and Turing commands

/// Tape alphabets and state names of the Turing machine an S(M)-shaped
/// hardware is built for.
#[derive(Debug, Clone)]
pub struct TmShape {
    pub tapes: Vec<Vec<LetterId>>,
    pub states: Vec<String>,
}

/// One tape of a configuration E_i v_i F_{q_i}.
#[derive(Debug, Clone)]
pub struct TapeConfig {
    pub v: GroupWord,
    pub q: String,
}

fn st(name: String) -> LetterId {
    Letter::new(name, LetterKind::State).intern()
}

const BLOCK: [&str; 12] = ["p", "q", "r", "s", "t", "u", "pbar", "qbar", "rbar", "sbar", "tbar", "ubar"];

impl TmShape {
    pub fn k(&self) -> usize {
        self.tapes.len()
    }

    fn check(&self) -> Result<(), PresentationError> {
        if self.tapes.is_empty() {
            return Err(PresentationError::AlphabetMismatch("need at least one tape".into()));
        }
        for q in &self.states {
            if q.is_empty() || !q.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(PresentationError::AlphabetMismatch(format!("bad state name `{q}`")));
            }
        }
        Ok(())
    }

    /// The 17k + 6 state parts and the sectors between them: α-sectors in
    /// the first block, Y_i around x(i), δ-sectors from p(i) to F'(i),
    /// ω-sectors in the last block and empty alphabets elsewhere.
    pub fn hardware(&self, sp: &Specials) -> Result<Hardware, PresentationError> {
        self.check()?;
        let k = self.k();
        let mut states: Vec<Vec<LetterId>> = Vec::with_capacity(17 * k + 6);
        let mut tape: Vec<Vec<LetterId>> = Vec::with_capacity(17 * k + 5);
        states.push(vec![st("E(0)".into())]);
        tape.push(vec![sp.alpha]);
        states.push(vec![st("x(0)".into())]);
        tape.push(vec![sp.alpha]);
        states.push(vec![st("F(0)".into())]);
        for i in 1..=k {
            let y = self.tapes[i - 1].clone();
            tape.push(vec![]);
            states.push(vec![st(format!("E({i})"))]);
            tape.push(y.clone());
            states.push(vec![st(format!("x({i})"))]);
            tape.push(y);
            states.push(self.states.iter().map(|q| st(format!("F_{q}({i})"))).collect());
            tape.push(vec![]);
            states.push(vec![st(format!("E'({i})"))]);
            tape.push(vec![]);
            for name in BLOCK {
                states.push(vec![st(format!("{name}({i})"))]);
                tape.push(vec![sp.delta]);
            }
            states.push(self.states.iter().map(|q| st(format!("F'_{q}({i})"))).collect());
        }
        tape.push(vec![]);
        states.push(vec![st(format!("E'({})", k + 1))]);
        tape.push(vec![sp.omega]);
        states.push(vec![st(format!("x'({})", k + 1))]);
        tape.push(vec![sp.omega]);
        states.push(vec![st(format!("F'({})", k + 1))]);
        Ok(Hardware::new(tape, states)?)
    }
}

/// σ(c) for a configuration with one (v_i, q_i) per tape; the δ-block
/// after p(i) has exponent ||v_i||, the sum of the exponents in v_i.
pub fn sigma_encode(shape: &TmShape, config: &[TapeConfig], n: usize, sp: &Specials) -> Result<GroupWord, PresentationError> {
    shape.check()?;
    let k = shape.k();
    if config.len() != k {
        return Err(PresentationError::AlphabetMismatch(format!(
            "{} tapes configured, hardware has {k}",
            config.len()
        )));
    }
    let mut w: Vec<SignedLetter> = Vec::new();
    let pow = |l: LetterId, e: i64| -> Vec<SignedLetter> {
        let s = if e < 0 { l.neg() } else { l.pos() };
        vec![s; e.unsigned_abs() as usize]
    };
    w.push(st("E(0)".into()).pos());
    w.extend(pow(sp.alpha, n as i64));
    w.push(st("x(0)".into()).pos());
    w.push(st("F(0)".into()).pos());
    for (i, c) in config.iter().enumerate() {
        let i1 = i + 1;
        if let Some(x) = c.v.iter().find(|x| !shape.tapes[i].contains(&x.letter())) {
            return Err(PresentationError::AlphabetMismatch(format!("`{x}` is not on tape {i1}")));
        }
        if !shape.states.contains(&c.q) {
            return Err(PresentationError::AlphabetMismatch(format!("unknown state `{}`", c.q)));
        }
        w.push(st(format!("E({i1})")).pos());
        w.extend(c.v.clone().reduce().iter());
        w.push(st(format!("x({i1})")).pos());
        w.push(st(format!("F_{}({i1})", c.q)).pos());
        w.push(st(format!("E'({i1})")).pos());
        w.push(st(format!("p({i1})")).pos());
        w.extend(pow(sp.delta, c.v.algebraic_degree_sum()));
        for name in &BLOCK[1..] {
            w.push(st(format!("{name}({i1})")).pos());
        }
        w.push(st(format!("F'_{}({i1})", c.q)).pos());
    }
    w.push(st(format!("E'({})", k + 1)).pos());
    w.push(st(format!("x'({})", k + 1)).pos());
    w.extend(pow(sp.omega, n as i64));
    w.push(st(format!("F'({})", k + 1)).pos());
    Ok(GroupWord::raw(w))
}

/// A symbol of a Turing command in normalized form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TmSym {
    Tape(LetterId),
    E(usize),
    F(String),
}

/// One piece `lhs → rhs` per tape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmPiece {
    pub lhs: Vec<TmSym>,
    pub rhs: Vec<TmSym>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmCommand {
    pub pieces: Vec<TmPiece>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmCommandForm {
    /// `a F_q → F_q'` on tape `tape` (0-based); `positive` is false for the
    /// inverse `F_q' → a F_q`.
    Form1 { tape: usize, positive: bool },
    /// `E_i F_q → E_i F_q'` on tape `tape`.
    Form2 { tape: usize },
}

impl TmCommand {
    /// Parses pieces separated by `,`, e.g. `a F_q -> F_r, F_s -> F_t`.
    /// `E<i>` is a left marker, `F_<name>` a state word, anything else a
    /// tape letter.
    pub fn parse(text: &str) -> Result<TmCommand, PresentationError> {
        let sym = |t: &str| -> TmSym {
            if let Some(q) = t.strip_prefix("F_") {
                return TmSym::F(q.to_string());
            }
            if let Some(i) = t.strip_prefix('E').and_then(|d| d.parse().ok()) {
                return TmSym::E(i);
            }
            TmSym::Tape(Letter::new(t, LetterKind::Tape).intern())
        };
        let pieces = text
            .split(',')
            .map(|piece| {
                let (l, r) = piece
                    .split_once("->")
                    .ok_or_else(|| PresentationError::UnrecognizedShape(format!("missing `->` in `{piece}`")))?;
                Ok(TmPiece {
                    lhs: l.split_whitespace().map(sym).collect(),
                    rhs: r.split_whitespace().map(sym).collect(),
                })
            })
            .collect::<Result<Vec<_>, PresentationError>>()?;
        Ok(TmCommand { pieces })
    }
}

pub fn classify_tm_command(cmd: &TmCommand) -> Result<TmCommandForm, PresentationError> {
    let bad = |m: &str| Err(PresentationError::UnrecognizedShape(m.to_string()));
    let mut special = None;
    for (i, piece) in cmd.pieces.iter().enumerate() {
        let form = match (piece.lhs.as_slice(), piece.rhs.as_slice()) {
            ([TmSym::F(_)], [TmSym::F(_)]) => None,
            ([TmSym::Tape(_), TmSym::F(_)], [TmSym::F(_)]) => Some(TmCommandForm::Form1 { tape: i, positive: true }),
            ([TmSym::F(_)], [TmSym::Tape(_), TmSym::F(_)]) => Some(TmCommandForm::Form1 { tape: i, positive: false }),
            ([TmSym::E(a), TmSym::F(_)], [TmSym::E(b), TmSym::F(_)]) if a == b => Some(TmCommandForm::Form2 { tape: i }),
            _ => return bad(&format!("piece {} has neither printed shape", i + 1)),
        };
        if let Some(f) = form {
            if special.replace(f).is_some() {
                return bad("more than one non-trivial piece");
            }
        }
    }
    match special {
        Some(f) => Ok(f),
        None => bad("no piece of the form a F_q -> F_q' or E_i F_q -> E_i F_q'"),
    }
}

/// Reported lengths of K(u) for a word u: the unreduced symbol count
/// 4N(|u|+1) and the reduced length.
pub fn hub_lengths(u: &GroupWord, n: usize) -> Result<(usize, usize), PresentationError> {
    let raw = hub_word_unreduced(u, n)?;
    Ok((raw.len(), raw.reduce().len()))
}

impl fmt::Display for GroupPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Samples n ↦ largest oracle area among the given null-homotopic words of
/// length n.
pub fn area_samples(p: &GroupPresentation, words: &[GroupWord], max_len: usize, max_area: usize) -> BTreeMap<u64, f64> {
    let mut out: BTreeMap<u64, f64> = BTreeMap::new();
    for w in words {
        if let Some(a) = brute_force_area(p, w, max_len, max_area) {
            let e = out.entry(w.len() as u64).or_insert(0.0);
            *e = e.max(a as f64);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> (LetterId, LetterId) {
        (
            Letter::new("a", LetterKind::Tape).with_copy("pr").intern(),
            Letter::new("b", LetterKind::Tape).with_copy("pr").intern(),
        )
    }

    #[test]
    fn hub_examples() {
        let e = hub_word(&GroupWord::empty(), 1).unwrap();
        assert_eq!(e.to_string(), "kappa1 kappa2 kappa1^-1 kappa2^-1");
        let (a, _) = ab();
        let k = hub_word(&GroupWord::letter(a.pos()), 1).unwrap();
        assert_eq!(k.len(), 8);
        assert_eq!(
            k.to_string(),
            "a.pr^-1 kappa1 a.pr kappa2 a.pr^-1 kappa1^-1 a.pr kappa2^-1"
        );
        assert!(matches!(
            hub_word(&GroupWord::letter(kappa(1).pos()), 1),
            Err(PresentationError::KappaCollision(_))
        ));
    }

    #[test]
    fn commutator_trace_and_area() {
        let (a, b) = ab();
        let comm = GroupWord::raw(vec![a.pos(), b.pos(), a.neg(), b.neg()]);
        let p = GroupPresentation::from_relators([comm.clone()]);
        let t = RelatorTrace {
            start: GroupWord::raw(vec![a.pos(), b.pos()]),
            steps: vec![TraceStep {
                relator: 0,
                exponent: -1,
                conjugator: GroupWord::empty(),
            }],
            end: GroupWord::raw(vec![b.pos(), a.pos()]),
        };
        // stored rotation is a⁻¹b⁻¹ab, so ab · (a⁻¹b⁻¹ab)⁻¹ = ba
        assert_eq!(p.relators[0].word.to_string(), "a.pr^-1 b.pr^-1 a.pr b.pr");
        assert!(verify_trace(&p, &t).unwrap());
        assert_eq!(brute_force_area(&p, &comm, 8, 3), Some(1));
        assert_eq!(brute_force_area(&p, &GroupWord::empty(), 8, 3), Some(0));
        let bad = RelatorTrace {
            start: GroupWord::raw(vec![a.pos()]),
            steps: vec![],
            end: GroupWord::raw(vec![b.pos()]),
        };
        assert!(!verify_trace(&p, &bad).unwrap());
        let oob = RelatorTrace {
            start: GroupWord::empty(),
            steps: vec![TraceStep {
                relator: 5,
                exponent: 1,
                conjugator: GroupWord::empty(),
            }],
            end: GroupWord::empty(),
        };
        assert!(matches!(verify_trace(&p, &oob), Err(PresentationError::IndexOutOfRange { .. })));
    }

    #[test]
    fn adding_traces_verify() {
        use crate::adding::{base_alphabet, build_adding};
        let z = build_adding(&base_alphabet(&["a", "b"])).unwrap();
        let u = z.power_word(2);
        let w0 = z.start_word(&u, 1);
        let p = generate_presentation(&z.machine, &HubParams { n: 1, w0: w0.clone() }, None).unwrap();
        assert_eq!(p.count(RelatorTag::Hub), 1);
        assert!(p.count(RelatorTag::Transition) >= z.machine.n_positive());
        let run = z.canonical_run(&u, None).unwrap().computation;
        for (i, &rid) in run.steps.iter().enumerate() {
            let t = rule_application_trace(&p, &z.machine, rid, &run.words[i]).unwrap();
            assert!(verify_trace(&p, &t).unwrap(), "step {i}");
            let back = z.machine.inverse_id(rid);
            let t = rule_application_trace(&p, &z.machine, back, &run.words[i + 1]).unwrap_or_else(|e| panic!("{e} {:?} -> {:?}", run.words[i].flatten().to_string(), run.words[i + 1].flatten().to_string()));
            assert!(verify_trace(&p, &t).unwrap(), "inverse step {i}");
        }
    }

    #[test]
    fn command_forms() {
        let f1 = TmCommand::parse("a F_q -> F_r, F_s -> F_t").unwrap();
        assert_eq!(classify_tm_command(&f1).unwrap(), TmCommandForm::Form1 { tape: 0, positive: true });
        let f2 = TmCommand::parse("F_q -> F_r, E2 F_s -> E2 F_t").unwrap();
        assert_eq!(classify_tm_command(&f2).unwrap(), TmCommandForm::Form2 { tape: 1 });
        let neither = TmCommand::parse("a F_q -> b F_r").unwrap();
        assert!(classify_tm_command(&neither).is_err());
        let plain = TmCommand::parse("F_q -> F_r").unwrap();
        assert!(classify_tm_command(&plain).is_err());
    }

    #[test]
    fn sigma_small() {
        let sp = Specials::standard();
        let (a, _) = ab();
        let shape = TmShape {
            tapes: vec![vec![a]],
            states: vec!["q0".into()],
        };
        let hw = shape.hardware(&sp).unwrap();
        assert_eq!(hw.n_parts(), 23);
        let one = sigma_encode(&shape, &[TapeConfig { v: GroupWord::letter(a.pos()), q: "q0".into() }], 2, &sp).unwrap();
        assert_eq!(one.count_kind(LetterKind::State), 23);
        assert_eq!(one.iter().filter(|s| s.letter() == sp.delta).count(), 1);
        hw.parse_admissible(&one).unwrap();
        let zero = sigma_encode(
            &shape,
            &[TapeConfig {
                v: GroupWord::raw(vec![a.pos(), a.neg()]),
                q: "q0".into(),
            }],
            0,
            &sp,
        )
        .unwrap();
        assert_eq!(zero.iter().filter(|s| s.letter() == sp.delta).count(), 0);
        assert!(sigma_encode(&shape, &[], 0, &sp).is_err());
    }
}
