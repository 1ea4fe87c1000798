//! Letters, alphabets and free-group words.
//!
//! Letters are interned process-wide: a [`LetterId`] is a small integer that
//! compares in O(1), and a [`SignedLetter`] packs the id together with its
//! exponent into a single `u32`. Everything that rewrites words works on
//! these packed values; the [`Letter`] record is only consulted for display
//! and parsing.

use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// What a letter is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LetterKind {
    Tape,
    State,
    Rule,
    Kappa,
    Special,
}

/// A letter as declared by its owner. Two letters are the same letter iff
/// all four fields agree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Letter {
    pub name: String,
    pub kind: LetterKind,
    pub sector: Option<u32>,
    pub copy: Option<String>,
}

impl Letter {
    pub fn new(name: impl Into<String>, kind: LetterKind) -> Self {
        Letter {
            name: name.into(),
            kind,
            sector: None,
            copy: None,
        }
    }

    pub fn with_copy(mut self, copy: impl Into<String>) -> Self {
        self.copy = Some(copy.into());
        self
    }

    pub fn with_sector(mut self, sector: u32) -> Self {
        self.sector = Some(sector);
        self
    }

    /// Interns the letter, returning its id. Interning the same letter twice
    /// yields the same id.
    pub fn intern(self) -> LetterId {
        interner().intern(self)
    }

    /// `name[.copy][@sector]`
    pub fn token(&self) -> String {
        let mut s = self.name.clone();
        if let Some(c) = &self.copy {
            s.push('.');
            s.push_str(c);
        }
        if let Some(sec) = self.sector {
            s.push('@');
            s.push_str(&sec.to_string());
        }
        s
    }
}

#[derive(Default)]
struct Interner {
    inner: RwLock<InternerTable>,
}

#[derive(Default)]
struct InternerTable {
    letters: Vec<&'static Letter>,
    tokens: Vec<&'static str>,
    ids: HashMap<Letter, LetterId>,
}

impl Interner {
    fn intern(&self, letter: Letter) -> LetterId {
        if let Some(id) = self.inner.read().unwrap().ids.get(&letter) {
            return *id;
        }
        let mut table = self.inner.write().unwrap();
        if let Some(id) = table.ids.get(&letter) {
            return *id;
        }
        let id = LetterId(u32::try_from(table.letters.len()).expect("letter table overflow"));
        let token: &'static str = Box::leak(letter.token().into_boxed_str());
        let leaked: &'static Letter = Box::leak(Box::new(letter.clone()));
        table.letters.push(leaked);
        table.tokens.push(token);
        table.ids.insert(letter, id);
        id
    }
}

fn interner() -> &'static Interner {
    static INTERNER: OnceLock<Interner> = OnceLock::new();
    INTERNER.get_or_init(Interner::default)
}

/// Interned handle of a [`Letter`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LetterId(u32);

impl LetterId {
    pub fn letter(self) -> &'static Letter {
        interner().inner.read().unwrap().letters[self.0 as usize]
    }

    pub fn token(self) -> &'static str {
        interner().inner.read().unwrap().tokens[self.0 as usize]
    }

    pub fn kind(self) -> LetterKind {
        self.letter().kind
    }

    pub fn pos(self) -> SignedLetter {
        SignedLetter::new(self, 1)
    }

    pub fn neg(self) -> SignedLetter {
        SignedLetter::new(self, -1)
    }
}

impl fmt::Debug for LetterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

impl fmt::Display for LetterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A letter with exponent +1 or -1, packed as `id << 1 | negative`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedLetter(u32);

impl SignedLetter {
    pub fn new(letter: LetterId, exponent: i8) -> Self {
        assert!(exponent == 1 || exponent == -1, "exponent must be +1 or -1");
        SignedLetter(letter.0 << 1 | u32::from(exponent < 0))
    }

    #[inline]
    pub fn letter(self) -> LetterId {
        LetterId(self.0 >> 1)
    }

    #[inline]
    pub fn exponent(self) -> i8 {
        if self.0 & 1 == 0 {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub fn inverse(self) -> Self {
        SignedLetter(self.0 ^ 1)
    }

    #[inline]
    pub fn cancels(self, other: SignedLetter) -> bool {
        self.0 ^ other.0 == 1
    }
}

impl fmt::Debug for SignedLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SignedLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter().token())?;
        if !self.is_positive() {
            f.write_str("^-1")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("bad exponent in `{0}` (only ^1 and ^-1 are allowed)")]
    BadExponent(String),
}

/// A word in the free group. `reduced` caches the fact that no adjacent
/// pair cancels; it never affects equality.
#[derive(Clone, Default)]
pub struct GroupWord {
    syms: Vec<SignedLetter>,
    reduced: bool,
}

impl PartialEq for GroupWord {
    fn eq(&self, other: &Self) -> bool {
        self.syms == other.syms
    }
}

impl Eq for GroupWord {}

impl std::hash::Hash for GroupWord {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.syms.hash(state)
    }
}

impl GroupWord {
    pub fn empty() -> Self {
        GroupWord {
            syms: Vec::new(),
            reduced: true,
        }
    }

    /// Wraps a raw symbol sequence without reducing it.
    pub fn raw(syms: Vec<SignedLetter>) -> Self {
        let reduced = syms.len() < 2;
        GroupWord { syms, reduced }
    }

    pub fn reduced(syms: Vec<SignedLetter>) -> Self {
        GroupWord::raw(syms).reduce()
    }

    pub fn letter(s: SignedLetter) -> Self {
        GroupWord {
            syms: vec![s],
            reduced: true,
        }
    }

    pub fn symbols(&self) -> &[SignedLetter] {
        &self.syms
    }

    pub fn into_symbols(self) -> Vec<SignedLetter> {
        self.syms
    }

    pub fn len(&self) -> usize {
        self.syms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syms.is_empty()
    }

    pub fn is_reduced_cached(&self) -> bool {
        self.reduced
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = SignedLetter> + ExactSizeIterator + '_ {
        self.syms.iter().copied()
    }

    /// Free reduction, single stack pass.
    pub fn reduce(self) -> Self {
        if self.reduced {
            return self;
        }
        let mut out: Vec<SignedLetter> = Vec::with_capacity(self.syms.len());
        for s in self.syms {
            match out.last() {
                Some(&top) if top.cancels(s) => {
                    out.pop();
                }
                _ => out.push(s),
            }
        }
        GroupWord {
            syms: out,
            reduced: true,
        }
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced || self.syms.windows(2).all(|p| !p[0].cancels(p[1]))
    }

    pub fn invert(&self) -> Self {
        GroupWord {
            syms: self.syms.iter().rev().map(|s| s.inverse()).collect(),
            reduced: self.reduced,
        }
    }

    pub fn concat(&self, other: &GroupWord, reduce_after: bool) -> Self {
        if reduce_after {
            let mut out = self.clone().reduce();
            out.push_all_reduced(other.iter());
            out
        } else {
            let mut syms = Vec::with_capacity(self.len() + other.len());
            syms.extend_from_slice(&self.syms);
            syms.extend_from_slice(&other.syms);
            GroupWord::raw(syms)
        }
    }

    /// Appends with cancellation against the current tail. Keeps a reduced
    /// word reduced when the appended symbols are themselves reduced.
    pub fn push_reduced(&mut self, s: SignedLetter) {
        match self.syms.last() {
            Some(&top) if top.cancels(s) => {
                self.syms.pop();
            }
            _ => self.syms.push(s),
        }
    }

    pub fn push_all_reduced(&mut self, it: impl IntoIterator<Item = SignedLetter>) {
        if !self.reduced {
            *self = std::mem::take(self).reduce();
        }
        for s in it {
            self.push_reduced(s);
        }
        self.reduced = true;
    }

    pub fn push_raw(&mut self, s: SignedLetter) {
        if let Some(&top) = self.syms.last() {
            if top.cancels(s) {
                self.reduced = false;
            }
        }
        self.syms.push(s);
    }

    pub fn is_positive(&self) -> bool {
        self.syms.iter().all(|s| s.is_positive())
    }

    /// Sum of exponents.
    pub fn algebraic_degree_sum(&self) -> i64 {
        self.syms.iter().map(|s| i64::from(s.exponent())).sum()
    }

    /// Number of letters of the given kind.
    pub fn count_kind(&self, kind: LetterKind) -> usize {
        self.syms.iter().filter(|s| s.letter().kind() == kind).count()
    }

    pub fn starts_with(&self, prefix: &[SignedLetter]) -> bool {
        self.syms.starts_with(prefix)
    }

    pub fn ends_with(&self, suffix: &[SignedLetter]) -> bool {
        self.syms.ends_with(suffix)
    }

    /// `self^k` for k >= 0, reduced.
    pub fn pow(&self, k: usize) -> Self {
        let mut out = GroupWord::empty();
        for _ in 0..k {
            out.push_all_reduced(self.iter());
        }
        out
    }

    /// Parses whitespace-separated tokens, resolving each through `resolve`.
    /// `1` denotes the empty word. The result is not reduced.
    pub fn parse_with<F>(text: &str, mut resolve: F) -> Result<Self, WordError>
    where
        F: FnMut(&str) -> Option<LetterId>,
    {
        let mut syms = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (name, exp) = split_exponent(tok)?;
            let id = resolve(name).ok_or_else(|| WordError::UnknownLetter(name.to_string()))?;
            syms.push(SignedLetter::new(id, exp));
        }
        Ok(GroupWord::raw(syms))
    }
}

fn split_exponent(tok: &str) -> Result<(&str, i8), WordError> {
    match tok.rsplit_once('^') {
        None => Ok((tok, 1)),
        Some((name, "-1")) => Ok((name, -1)),
        Some((name, "1")) => Ok((name, 1)),
        Some(_) => Err(WordError::BadExponent(tok.to_string())),
    }
}

impl FromIterator<SignedLetter> for GroupWord {
    fn from_iter<T: IntoIterator<Item = SignedLetter>>(iter: T) -> Self {
        GroupWord::raw(iter.into_iter().collect())
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syms.is_empty() {
            return f.write_str("1");
        }
        for (i, s) in self.syms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

/// Which part of a hardware an alphabet belongs to (0-based index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlphabetRole {
    Tape(usize),
    State(usize),
}

/// A finite set of letters kept sorted by id for binary-search membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    letters: Vec<LetterId>,
    role: AlphabetRole,
}

impl Alphabet {
    pub fn new(role: AlphabetRole, letters: impl IntoIterator<Item = LetterId>) -> Self {
        let mut letters: Vec<LetterId> = letters.into_iter().collect();
        letters.sort();
        letters.dedup();
        Alphabet { letters, role }
    }

    pub fn role(&self) -> AlphabetRole {
        self.role
    }

    pub fn letters(&self) -> &[LetterId] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    #[inline]
    pub fn contains(&self, l: LetterId) -> bool {
        self.letters.binary_search(&l).is_ok()
    }

    /// Letters sorted by their display token, for deterministic output.
    pub fn sorted_by_token(&self) -> Vec<LetterId> {
        let mut v = self.letters.clone();
        v.sort_by(|a, b| a.token().cmp(b.token()));
        v
    }

    pub fn shares_kind(&self) -> bool {
        self.letters
            .first()
            .map(|f| self.letters.iter().all(|l| l.kind() == f.kind()))
            .unwrap_or(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> (LetterId, LetterId) {
        (
            Letter::new("a", LetterKind::Tape).with_copy("wt").intern(),
            Letter::new("b", LetterKind::Tape).with_copy("wt").intern(),
        )
    }

    #[test]
    fn reduce_examples() {
        let (a, b) = ab();
        assert!(GroupWord::reduced(vec![a.pos(), a.neg()]).is_empty());
        let w = GroupWord::reduced(vec![a.pos(), b.pos(), b.neg(), a.pos()]);
        assert_eq!(w.symbols(), &[a.pos(), a.pos()]);
        assert!(w.is_reduced_cached());
    }

    #[test]
    fn invert_examples() {
        let (a, b) = ab();
        let w = GroupWord::raw(vec![a.pos(), b.neg()]);
        assert_eq!(w.invert().symbols(), &[b.pos(), a.neg()]);
        assert!(GroupWord::empty().invert().is_empty());
    }

    #[test]
    fn concat_examples() {
        let (a, b) = ab();
        let x = GroupWord::letter(a.pos());
        assert!(x.concat(&GroupWord::letter(a.neg()), true).is_empty());
        let raw = x.concat(&GroupWord::letter(b.pos()), false);
        assert_eq!(raw.symbols(), &[a.pos(), b.pos()]);
    }

    #[test]
    fn positivity_and_degree() {
        let (a, _) = ab();
        assert!(GroupWord::raw(vec![a.pos(), a.pos()]).is_positive());
        assert!(!GroupWord::raw(vec![a.pos(), a.neg()]).is_positive());
        assert!(GroupWord::empty().is_positive());
        assert_eq!(GroupWord::raw(vec![a.pos(), a.pos()]).algebraic_degree_sum(), 2);
        assert_eq!(GroupWord::raw(vec![a.pos(), a.neg()]).algebraic_degree_sum(), 0);
        assert_eq!(GroupWord::raw(vec![a.neg()]).algebraic_degree_sum(), -1);
    }

    #[test]
    fn interning_is_stable() {
        let x = Letter::new("p", LetterKind::State).with_copy("th.1").with_sector(2);
        assert_eq!(x.clone().intern(), x.clone().intern());
        assert_eq!(x.intern().token(), "p.th.1@2");
        let y = Letter::new("p", LetterKind::Tape).with_copy("th.1").with_sector(2);
        assert_ne!(y.intern(), Letter::new("p", LetterKind::State).with_copy("th.1").with_sector(2).intern());
    }

    #[test]
    fn text_round_trip() {
        let (a, b) = ab();
        let w = GroupWord::raw(vec![a.pos(), b.neg(), a.pos()]);
        let text = w.to_string();
        assert_eq!(text, "a.wt b.wt^-1 a.wt");
        let back = GroupWord::parse_with(&text, |t| [a, b].into_iter().find(|l| l.token() == t)).unwrap();
        assert_eq!(back, w);
        assert_eq!(GroupWord::empty().to_string(), "1");
        assert!(GroupWord::parse_with("1", |_| None).unwrap().is_empty());
        assert!(matches!(
            GroupWord::parse_with("a.wt^2", |_| Some(a)),
            Err(WordError::BadExponent(_))
        ));
    }
}
