//! The composition S∘Z: an S-machine slowed down by copies of the adding
//! machine, one per sector.
//!
//! Layout (0-based): part `2i` holds K_i (the state letters of part `i` of
//! S) and part `2i + 1` holds P_i = {p_i} ∪ {p_i(θ, j)}. Sector `2s` is
//! Y_{s,0} ∪ Y_{s,1} and sector `2s + 1` is Y_{s,0}. A lifted word keeps the
//! content of S-sector `s` in sector `2s`, with p_s right before K_{s+1}.
//!
//! P_i also contains p_i(θ, 2): the copies of Z(Y_i) move p(1) to p(2) and
//! back, so the copied rules need a letter for it.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::adding::{adding_rules, copy_letter, AddingMachine, ZLetters};
use crate::machine::{
    applicable, run, AdmissibleWord, Computation, Hardware, Machine, MachineError, Pattern, RuleId, RunError, SRule,
    StepGuard, Strategy, Substitution, DEFAULT_VISITED_CAPACITY,
};
use crate::word::{GroupWord, Letter, LetterId, LetterKind, SignedLetter};

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("rule `{rule}` has the wrong shape: {reason}")]
    ShapeError { rule: String, reason: String },
    #[error("decorated letter `{0}` present")]
    MidSimulation(String),
    #[error("second-copy letter `{0}` present")]
    CopyLeak(String),
    #[error("rule `{0}` does not apply to the projected word")]
    NotApplicable(String),
    #[error("sector {sector}: {source}")]
    Sector {
        sector: usize,
        #[source]
        source: RunError,
    },
    #[error("simulation ended at `{got}`, expected `{expected}`")]
    Mismatch { got: String, expected: String },
    #[error(transparent)]
    Machine(#[from] MachineError),
}

/// Closed-form and actual rule counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComposeCounts {
    pub modified: usize,
    pub copied: usize,
    pub transition: usize,
    pub positive: usize,
    /// |Θ₊| + Σ_i |Θ₊|·(4|Y_i| + 2) + |Θ₊|
    pub expected: usize,
}

#[derive(Debug, Clone)]
struct ThetaRules {
    source: RuleId,
    name: String,
    bar: RuleId,
    /// Per sector, the copied Z rules in deterministic priority order.
    copies: Vec<Vec<RuleId>>,
    transition: RuleId,
    /// k'_i, the K-letters after θ.
    k_after: Vec<LetterId>,
}

/// S∘Z together with the bookkeeping needed to lift, project and simulate.
#[derive(Debug, Clone)]
pub struct ComposedMachine {
    pub machine: Machine,
    source: Machine,
    n_parts_s: usize,
    plain_p: Vec<LetterId>,
    decorated: HashMap<LetterId, (usize, usize, u8)>,
    copy0: Vec<HashMap<LetterId, LetterId>>,
    uncopy: HashMap<LetterId, (usize, u8, LetterId)>,
    thetas: Vec<ThetaRules>,
    counts: ComposeCounts,
}

pub const DOMAIN_NOTE: &str = "copied rules restrict every other odd sector to its own first copy Y_{s,0}";

fn shape(rule: &str, reason: impl Into<String>) -> ComposeError {
    ComposeError::ShapeError {
        rule: rule.to_string(),
        reason: reason.into(),
    }
}

fn p_letter(i: usize, deco: Option<(&str, u8)>) -> LetterId {
    Letter {
        name: format!("p{}", i + 1),
        kind: LetterKind::State,
        sector: None,
        copy: deco.map(|(t, j)| format!("{t}.{j}")),
    }
    .intern()
}

fn single(part: usize, left: GroupWord, q: SignedLetter, right: GroupWord) -> Pattern {
    Pattern {
        first_part: part,
        left,
        states: vec![q],
        inner: Vec::new(),
        right,
    }
}

fn fixed(part: usize, q: LetterId) -> Substitution {
    let p = single(part, GroupWord::empty(), q.pos(), GroupWord::empty());
    Substitution { from: p.clone(), to: p }
}

/// Builds S∘Z. Every positive rule of S must have one substitution per
/// part, each with a single positive state letter:
/// `[k_1 u_1 → k'_1 u'_1, v_1 k_2 u_2 → v'_1 k'_2 u'_2, ..., v_{N-1} k_N → v'_{N-1} k'_N]`.
pub fn compose(s: &Machine) -> Result<ComposedMachine, ComposeError> {
    let hw = s.hardware();
    let n = hw.n_parts();
    if n < 2 {
        return Err(shape("-", format!("need at least 2 parts, got {n}")));
    }
    for r in s.positive_rules() {
        check_shape(r, n)?;
    }

    // Tape copies.
    let mut copy0 = Vec::with_capacity(n - 1);
    let mut copies: Vec<(Vec<LetterId>, Vec<LetterId>, Vec<String>)> = Vec::with_capacity(n - 1);
    let mut uncopy = HashMap::new();
    for sec in 0..n - 1 {
        let base = hw.tape_alphabet(sec).sorted_by_token();
        let mut m0 = HashMap::new();
        let (mut a0, mut a1) = (Vec::new(), Vec::new());
        for &a in &base {
            let c0 = copy_letter(a, 0, Some(sec as u32 + 1));
            let c1 = copy_letter(a, 1, Some(sec as u32 + 1));
            for (c, j) in [(c0, 0u8), (c1, 1u8)] {
                if uncopy.insert(c, (sec, j, a)).is_some() {
                    return Err(shape("-", format!("tape letters collide after copying into `{c}`")));
                }
            }
            m0.insert(a, c0);
            a0.push(c0);
            a1.push(c1);
        }
        copy0.push(m0);
        copies.push((a0, a1, base.iter().map(|l| l.token().to_string()).collect()));
    }
    let map0 = |sec: usize, u: &GroupWord| -> GroupWord {
        GroupWord::raw(
            u.iter()
                .map(|x| SignedLetter::new(copy0[sec][&x.letter()], x.exponent()))
                .collect(),
        )
    };

    // Hardware.
    let thetas_s: Vec<(RuleId, &SRule)> = s.positive_ids().map(|id| (id, s.rule(id))).collect();
    for (_, r) in &thetas_s {
        if r.name.contains('@') || r.name.contains('/') {
            return Err(shape(&r.name, "rule names may not contain `@` or `/`"));
        }
    }
    let plain_p: Vec<LetterId> = (0..n - 1).map(|i| p_letter(i, None)).collect();
    let mut decorated = HashMap::new();
    let mut tape = Vec::with_capacity(2 * (n - 1));
    let mut states = Vec::with_capacity(2 * n - 1);
    for i in 0..n {
        states.push(hw.state_alphabet(i).letters().to_vec());
        if i + 1 < n {
            let mut p = vec![plain_p[i]];
            for (t, (_, r)) in thetas_s.iter().enumerate() {
                for j in 1..=3u8 {
                    let l = p_letter(i, Some((&r.name, j)));
                    decorated.insert(l, (i, t, j));
                    p.push(l);
                }
            }
            states.push(p);
            let (a0, a1, _) = &copies[i];
            tape.push(a0.iter().chain(a1).copied().collect());
            tape.push(a0.clone());
        }
    }
    let chw = Hardware::new(tape, states)?;

    // Rules.
    let mut bars = Vec::new();
    let mut copied = Vec::new();
    let mut transitions = Vec::new();
    let mut meta = Vec::new();
    for &(sid, r) in thetas_s.iter() {
        let k_after: Vec<LetterId> = r.subs.iter().map(|sub| sub.to.states[0].letter()).collect();
        let pd = |i: usize, j: u8| p_letter(i, Some((&r.name, j)));

        let mut subs = Vec::with_capacity(2 * n - 1);
        for k in 0..n {
            let (from, to) = (&r.subs[k].from, &r.subs[k].to);
            let right = |p: &Pattern| if k + 1 < n { map0(k, &p.right) } else { GroupWord::empty() };
            subs.push(Substitution {
                from: single(2 * k, GroupWord::empty(), from.states[0], right(from)),
                to: single(2 * k, GroupWord::empty(), to.states[0], right(to)),
            });
            if k + 1 < n {
                let next = &r.subs[k + 1];
                subs.push(Substitution {
                    from: single(2 * k + 1, map0(k, &next.from.left), plain_p[k].pos(), GroupWord::empty()),
                    to: single(2 * k + 1, map0(k, &next.to.left), pd(k, 1).pos(), GroupWord::empty()),
                });
            }
        }
        let mut bar = SRule::new(format!("{}_bar", r.name), subs);
        for sec in 0..n - 1 {
            let dom: Vec<LetterId> = match r.domains.get(&sec) {
                Some(d) => d.letters().iter().map(|a| copy0[sec][a]).collect(),
                None => copies[sec].0.clone(),
            };
            bar = bar.with_domain(2 * sec, dom).with_domain(2 * sec + 1, []);
        }
        bars.push(bar);

        let mut per_sector = Vec::with_capacity(n - 1);
        for sec in 0..n - 1 {
            let (a0, a1, names) = &copies[sec];
            let z = ZLetters {
                l: k_after[sec],
                p: [pd(sec, 1), pd(sec, 2), pd(sec, 3)],
                r: k_after[sec + 1],
                a0: a0.clone(),
                a1: a1.clone(),
            };
            let mut ids = Vec::new();
            for (_, mut rule) in adding_rules(&z, 2 * sec, names) {
                for j in 0..sec {
                    rule.subs.push(fixed(2 * j, k_after[j]));
                    rule.subs.push(fixed(2 * j + 1, pd(j, 3)));
                }
                for j in sec + 1..n - 1 {
                    rule.subs.push(fixed(2 * j + 1, pd(j, 1)));
                    rule.subs.push(fixed(2 * j + 2, k_after[j + 1]));
                }
                rule.subs.sort_by_key(|sub| sub.from.first_part);
                for j in (0..n - 1).filter(|&j| j != sec) {
                    rule = rule.with_domain(2 * j, copies[j].0.clone());
                }
                rule.name = format!("{}/{}/{}", rule.name, sec + 1, r.name);
                ids.push(copied.len());
                copied.push(rule);
            }
            per_sector.push(ids);
        }

        let mut subs = Vec::with_capacity(2 * (n - 1));
        for i in 0..n - 1 {
            subs.push(fixed(2 * i, k_after[i]));
            let q3 = single(2 * i + 1, GroupWord::empty(), pd(i, 3).pos(), GroupWord::empty());
            let q = single(2 * i + 1, GroupWord::empty(), plain_p[i].pos(), GroupWord::empty());
            subs.push(Substitution { from: q3, to: q });
        }
        transitions.push(SRule::new(format!("trans_{}", r.name), subs));
        meta.push((sid, r.name.clone(), per_sector, k_after));
    }

    let n_theta = bars.len();
    let n_copied = copied.len();
    let all: Vec<SRule> = bars.into_iter().chain(copied).chain(transitions).collect();
    let machine = Machine::new(chw, all)?.with_notes(vec![crate::adding::DOMAIN_NOTE.into(), DOMAIN_NOTE.into()]);
    let thetas = meta
        .into_iter()
        .enumerate()
        .map(|(t, (source, name, per_sector, k_after))| ThetaRules {
            source,
            name,
            bar: RuleId(t),
            copies: per_sector
                .into_iter()
                .map(|ids| ids.into_iter().map(|c| RuleId(n_theta + c)).collect())
                .collect(),
            transition: RuleId(n_theta + n_copied + t),
            k_after,
        })
        .collect();
    let sum_z: usize = (0..n - 1).map(|sec| 4 * hw.tape_alphabet(sec).len() + 2).sum();
    let counts = ComposeCounts {
        modified: n_theta,
        copied: n_copied,
        transition: n_theta,
        positive: machine.n_positive(),
        expected: n_theta + n_theta * sum_z + n_theta,
    };
    Ok(ComposedMachine {
        machine,
        source: s.clone(),
        n_parts_s: n,
        plain_p,
        decorated,
        copy0,
        uncopy,
        thetas,
        counts,
    })
}

fn check_shape(r: &SRule, n: usize) -> Result<(), ComposeError> {
    if r.subs.len() != n {
        return Err(shape(&r.name, format!("expected {n} substitutions, one per part, got {}", r.subs.len())));
    }
    for (k, sub) in r.subs.iter().enumerate() {
        if sub.from.first_part != k || sub.from.states.len() != 1 {
            return Err(shape(&r.name, format!("substitution {} must mention exactly part {}", k + 1, k + 1)));
        }
        if sub.from.states[0].exponent() < 0 || sub.to.states[0].exponent() < 0 {
            return Err(shape(&r.name, "state letters must be positive"));
        }
    }
    Ok(())
}

/// One simulated S-step.
#[derive(Debug, Clone)]
pub struct StepRun {
    pub computation: Computation,
    /// Lengths of the per-sector Z runs, left to right.
    pub sector_steps: Vec<usize>,
    /// Sector lengths |u_i| the Z runs started from.
    pub sector_lengths: Vec<usize>,
    pub fallback: bool,
}

impl StepRun {
    pub fn len(&self) -> usize {
        self.computation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.computation.is_empty()
    }
}

impl ComposedMachine {
    pub fn counts(&self) -> ComposeCounts {
        self.counts
    }

    pub fn source(&self) -> &Machine {
        &self.source
    }

    /// |P_i| for every i.
    pub fn p_part_sizes(&self) -> Vec<usize> {
        (0..self.n_parts_s - 1)
            .map(|i| self.machine.hardware().state_alphabet(2 * i + 1).len())
            .collect()
    }

    pub fn plain_p(&self) -> &[LetterId] {
        &self.plain_p
    }

    pub fn is_decorated(&self, l: LetterId) -> bool {
        self.decorated.contains_key(&l)
    }

    /// Names and composed rule ids of θ̄ for every positive θ of S.
    pub fn modified_rules(&self) -> Vec<(String, RuleId)> {
        self.thetas.iter().map(|t| (t.name.clone(), t.bar)).collect()
    }

    pub fn transition_rules(&self) -> Vec<(String, RuleId)> {
        self.thetas.iter().map(|t| (t.name.clone(), t.transition)).collect()
    }

    /// Inserts p_i before K_{i+1} and maps tape letters to Y_{i,0}.
    pub fn lift_word(&self, w: &AdmissibleWord) -> AdmissibleWord {
        let n = self.n_parts_s;
        let mut states = Vec::with_capacity(2 * n - 1);
        let mut sectors = Vec::with_capacity(2 * n - 2);
        for i in 0..n {
            states.push(w.states[i]);
            if i + 1 < n {
                states.push(self.plain_p[i].pos());
                sectors.push(GroupWord::raw(
                    w.sectors[i]
                        .iter()
                        .map(|x| SignedLetter::new(self.copy0[i][&x.letter()], x.exponent()))
                        .collect(),
                ));
                sectors.push(GroupWord::empty());
            }
        }
        AdmissibleWord::new(states, sectors)
    }

    /// Erases p-letters and maps Y_{i,0} back to Y_i.
    pub fn project(&self, w: &AdmissibleWord) -> Result<AdmissibleWord, ComposeError> {
        let n = self.n_parts_s;
        let mut states = Vec::with_capacity(n);
        let mut sectors = Vec::with_capacity(n - 1);
        for i in 0..n {
            states.push(w.states[2 * i]);
            if i + 1 < n {
                let p = w.states[2 * i + 1];
                if self.is_decorated(p.letter()) {
                    return Err(ComposeError::MidSimulation(p.to_string()));
                }
                let mut u = GroupWord::empty();
                for x in w.sectors[2 * i].iter().chain(w.sectors[2 * i + 1].iter()) {
                    match self.uncopy.get(&x.letter()) {
                        Some(&(_, 0, orig)) => u.push_reduced(SignedLetter::new(orig, x.exponent())),
                        _ => return Err(ComposeError::CopyLeak(x.to_string())),
                    }
                }
                sectors.push(u);
            }
        }
        Ok(AdmissibleWord::new(states, sectors))
    }

    fn theta_index(&self, id: RuleId) -> usize {
        let pos = self.source.positive_of(id);
        self.thetas.iter().position(|t| t.source == pos).expect("every positive rule has a θ̄")
    }

    /// Runs the copy Z_s(θ) from p_s(θ,1) until p_s(θ,3) sits before an
    /// empty second sector.
    fn run_copy(&self, t: usize, sec: usize, w: AdmissibleWord) -> Result<(Computation, bool), ComposeError> {
        let th = &self.thetas[t];
        let p3 = p_letter(sec, Some((&th.name, 3))).pos();
        let a0: BTreeSet<LetterId> = self.copy0[sec].values().copied().collect();
        let target = |w: &AdmissibleWord| {
            w.has_state_at_right_end(2 * sec + 1, p3) && w.sectors[2 * sec].iter().all(|x| a0.contains(&x.letter()))
        };
        let budget = AddingMachine::default_budget(w.sectors[2 * sec].len()).saturating_add(8);
        let det = Strategy::Deterministic {
            priority: th.copies[sec].clone(),
            guard: StepGuard::LengthPreserving,
            until: Some(&target),
        };
        let wrap = |source| ComposeError::Sector { sector: sec + 1, source };
        let comp = run(&self.machine, w.clone(), &det, budget).map_err(wrap)?;
        if target(comp.last()) {
            return Ok((comp, false));
        }
        let rules: Vec<RuleId> = th
            .copies[sec]
            .iter()
            .flat_map(|&id| [id, self.machine.inverse_id(id)])
            .collect();
        let len = w.len();
        let bfs = Strategy::SearchTarget {
            target: &target,
            rules: Some(rules),
            max_word_len: Some(len),
            capacity: DEFAULT_VISITED_CAPACITY,
        };
        let comp = run(&self.machine, w, &bfs, budget).map_err(wrap)?;
        Ok((comp, true))
    }

    fn forward(&self, t: usize, w: &AdmissibleWord) -> Result<StepRun, ComposeError> {
        let th = &self.thetas[t];
        let mut comp = Computation::start(w.clone());
        let next = self.machine.apply(th.bar, w)?;
        comp.push(th.bar, next);
        let mut sector_steps = Vec::new();
        let mut sector_lengths = Vec::new();
        let mut fallback = false;
        for sec in 0..self.n_parts_s - 1 {
            sector_lengths.push(comp.last().sectors[2 * sec].len());
            let (run, fb) = self.run_copy(t, sec, comp.last().clone())?;
            fallback |= fb;
            sector_steps.push(run.len());
            comp.extend(run);
        }
        let next = self.machine.apply(th.transition, comp.last())?;
        comp.push(th.transition, next);
        Ok(StepRun {
            computation: comp,
            sector_steps,
            sector_lengths,
            fallback,
        })
    }

    /// Simulates one application of the S-rule `theta` (either polarity)
    /// on a lifted word. The result ends at the lift of the S-successor.
    pub fn simulate_step(&self, theta: RuleId, w_lifted: &AdmissibleWord) -> Result<StepRun, ComposeError> {
        let projected = self.project(w_lifted)?;
        let rule = self.source.rule(theta);
        if !applicable(rule, &projected) {
            return Err(ComposeError::NotApplicable(rule.name.clone()));
        }
        let succ = self.lift_word(&self.source.apply(theta, &projected)?);
        let t = self.theta_index(theta);
        if self.source.is_positive(theta) {
            let run = self.forward(t, w_lifted)?;
            if run.computation.last() != &succ {
                return Err(ComposeError::Mismatch {
                    got: run.computation.last().to_string(),
                    expected: succ.to_string(),
                });
            }
            Ok(run)
        } else {
            let fwd = self.forward(t, &succ)?;
            let computation = fwd.computation.reversed(&self.machine);
            if computation.first() != w_lifted {
                return Err(ComposeError::Mismatch {
                    got: computation.first().to_string(),
                    expected: w_lifted.to_string(),
                });
            }
            Ok(StepRun { computation, ..fwd })
        }
    }

    /// Applies `steps` one after another from `w_lifted`.
    pub fn simulate(&self, steps: &[RuleId], w_lifted: &AdmissibleWord) -> Result<Vec<StepRun>, ComposeError> {
        let mut cur = w_lifted.clone();
        let mut out = Vec::with_capacity(steps.len());
        for &theta in steps {
            let r = self.simulate_step(theta, &cur)?;
            cur = r.computation.last().clone();
            out.push(r);
        }
        Ok(out)
    }

    /// The K-letters θ leaves behind (k'_1..k'_N).
    pub fn k_after(&self, theta: RuleId) -> &[LetterId] {
        &self.thetas[self.theta_index(theta)].k_after
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// N = 2, Y_1 = {a}, one rule [k1 → k1, k2 → a k2].
    fn grow() -> Machine {
        Machine::from_json(
            r#"{
              "tape_alphabets": [["a.cz"]],
              "state_alphabets": [["k1.cz"], ["k2.cz"]],
              "rules": [{"name": "grow", "substitutions": [
                {"pattern": "k1.cz", "replacement": "k1.cz"},
                {"pattern": "k2.cz", "replacement": "a.cz k2.cz"}]}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn counts_for_smallest_case() {
        let cm = compose(&grow()).unwrap();
        let c = cm.counts();
        assert_eq!((c.modified, c.copied, c.transition), (1, 6, 1));
        assert_eq!(c.positive, 8);
        assert_eq!(c.expected, 8);
        assert_eq!(cm.p_part_sizes(), vec![4]);
    }

    #[test]
    fn lift_and_project() {
        let s = grow();
        let cm = compose(&s).unwrap();
        let w = s.hardware().parse_admissible_str("k1.cz a.cz k2.cz").unwrap();
        let lifted = cm.lift_word(&w);
        assert_eq!(lifted.to_string(), "k1.cz a.cz.0@1 p1 k2.cz");
        assert_eq!(cm.project(&lifted).unwrap(), w);
    }

    #[test]
    fn step_counts_follow_g() {
        let s = grow();
        let cm = compose(&s).unwrap();
        let w = cm.lift_word(&s.hardware().parse_admissible_str("k1.cz k2.cz").unwrap());
        let step = cm.simulate_step(RuleId(0), &w).unwrap();
        assert_eq!(step.sector_steps, vec![5]);
        assert_eq!(step.len(), 7);
        step.computation.validate(&cm.machine).unwrap();
        let back = cm.simulate_step(RuleId(1), step.computation.last()).unwrap();
        assert_eq!(back.computation.last(), &w);
        let shrink = cm.simulate_step(RuleId(1), &w).unwrap();
        shrink.computation.validate(&cm.machine).unwrap();
        let expect = s.apply(RuleId(1), &s.hardware().parse_admissible_str("k1.cz k2.cz").unwrap()).unwrap();
        assert_eq!(cm.project(shrink.computation.last()).unwrap(), expect);
    }

    #[test]
    fn mid_simulation_is_rejected() {
        let s = grow();
        let cm = compose(&s).unwrap();
        let w = cm.lift_word(&s.hardware().parse_admissible_str("k1.cz k2.cz").unwrap());
        let mid = cm.machine.apply(RuleId(0), &w).unwrap();
        assert!(matches!(cm.project(&mid), Err(ComposeError::MidSimulation(_))));
    }

    #[test]
    fn shape_errors() {
        let s = Machine::from_json(
            r#"{
              "tape_alphabets": [["a.cz"]],
              "state_alphabets": [["k1.cz"], ["k2.cz"]],
              "rules": [{"name": "half", "substitutions": [{"pattern": "k2.cz", "replacement": "a.cz k2.cz"}]}]
            }"#,
        )
        .unwrap();
        assert!(matches!(compose(&s), Err(ComposeError::ShapeError { .. })));
    }
}
