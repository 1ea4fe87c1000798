//! Base-word predicates, computation metrics and the bound formulas used to
//! estimate diagram areas.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::adding::{AddingError, GTable};
use crate::machine::{AdmissibleWord, Computation};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("log' needs a positive argument, got {0}")]
    NonPositive(f64),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("g({0}) was not measured")]
    GTableMiss(usize),
    #[error("epsilon {0} must be below 1/4")]
    EpsilonTooLarge(f64),
}

impl From<AddingError> for AnalysisError {
    fn from(e: AddingError) -> Self {
        match e {
            AddingError::GTableMiss(n) => AnalysisError::GTableMiss(n),
            other => AnalysisError::DomainError(other.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Base words

/// A word over part names Q_1, Q_2, ...; entries are 0-based part indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BaseWord(pub Vec<u32>);

impl BaseWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses `Q1Q2Q1` or `Q1 Q2 Q1`.
    pub fn parse(text: &str) -> Result<BaseWord, String> {
        let mut out = Vec::new();
        for chunk in text.split(|c: char| c == 'Q' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let k: u32 = chunk.parse().map_err(|_| format!("bad base word `{text}`"))?;
            if k == 0 {
                return Err(format!("part numbers start at 1 in `{text}`"));
            }
            out.push(k - 1);
        }
        if out.is_empty() {
            return Err("empty base word".into());
        }
        Ok(BaseWord(out))
    }

    /// The sequence of parts of the state letters of `w`.
    pub fn of(w: &AdmissibleWord) -> BaseWord {
        BaseWord((0..w.states.len() as u32).collect())
    }
}

impl fmt::Display for BaseWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in &self.0 {
            write!(f, "Q{}", q + 1)?;
        }
        Ok(())
    }
}

pub type BaseSet = Vec<BaseWord>;

fn covers(b: &[BaseWord], w: &[u32]) -> bool {
    let (Some(first), Some(last)) = (w.first(), w.last()) else {
        return false;
    };
    if first != last {
        return false;
    }
    let mut hit = vec![false; w.len()];
    for base in b {
        let k = base.len();
        if k == 0 || k > w.len() {
            continue;
        }
        for s in 0..=w.len() - k {
            if w[s..s + k] == base.0[..] {
                hit[s..s + k].iter_mut().for_each(|h| *h = true);
            }
        }
    }
    hit.into_iter().all(|h| h)
}

/// Every position lies in an occurrence of some base from `b`, and the
/// first and last letters agree.
pub fn is_covered(b: &[BaseWord], w: &BaseWord) -> bool {
    covers(b, &w.0)
}

fn covered_subwords<'a>(b: &'a [BaseWord], w: &'a [u32]) -> impl Iterator<Item = (usize, usize)> + 'a {
    let n = w.len();
    (0..n).flat_map(move |i| (i + 1..=n).map(move |j| (i, j))).filter(move |&(i, j)| covers(b, &w[i..j]))
}

/// No subword is covered.
pub fn is_narrow(b: &[BaseWord], w: &BaseWord) -> bool {
    covered_subwords(b, &w.0).next().is_none()
}

/// The two readings of the tight clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TightReading {
    /// w = u·xvx with xvx covered and u narrow.
    Prefix,
    /// w = u·xvx with xvx covered and no other covered subword in w.
    WholeWord,
}

pub fn is_tight_with(b: &[BaseWord], w: &BaseWord, reading: TightReading) -> bool {
    let n = w.len();
    (0..n.saturating_sub(1)).any(|s| {
        if !covers(b, &w.0[s..]) {
            return false;
        }
        match reading {
            TightReading::Prefix => covered_subwords(b, &w.0[..s]).next().is_none(),
            TightReading::WholeWord => covered_subwords(b, &w.0).all(|occ| occ == (s, n)),
        }
    })
}

/// Tightness under the prefix reading.
pub fn is_tight(b: &[BaseWord], w: &BaseWord) -> bool {
    is_tight_with(b, w, TightReading::Prefix)
}

/// True when the two readings disagree on `w`.
pub fn tight_readings_diverge(b: &[BaseWord], w: &BaseWord) -> bool {
    is_tight_with(b, w, TightReading::Prefix) != is_tight_with(b, w, TightReading::WholeWord)
}

/// All base words of length 1..=max_len over `parts` letters.
pub fn all_base_words(parts: u32, max_len: usize) -> Vec<BaseWord> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                (0..parts).map(move |q| {
                    let mut v = w.clone();
                    v.push(q);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned().map(BaseWord));
    }
    out
}

// ---------------------------------------------------------------------------
// Metrics

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metrics {
    pub length: usize,
    pub a_length: usize,
}

pub fn metrics(w: &AdmissibleWord) -> Metrics {
    Metrics {
        length: w.len(),
        a_length: w.a_length(),
    }
}

pub fn a_length(w: &AdmissibleWord) -> usize {
    w.a_length()
}

/// max_i |W_i|_a.
pub fn width(c: &Computation) -> usize {
    c.words.iter().map(AdmissibleWord::a_length).max().unwrap_or(0)
}

/// Cell-count model: each step W_i → W_{i+1} costs one cell per part plus
/// one per tape letter of W_i.
pub fn area_estimate(c: &Computation, n_parts: usize) -> u64 {
    c.words[..c.len()]
        .iter()
        .map(|w| (n_parts + w.a_length()) as u64)
        .sum()
}

// ---------------------------------------------------------------------------
// Bound formulas

/// max(log₂ x, 1).
pub fn log_prime(x: f64) -> Result<f64, AnalysisError> {
    if x.is_nan() || x <= 0.0 {
        return Err(AnalysisError::NonPositive(x));
    }
    Ok(x.log2().max(1.0))
}

/// log'n / log'log'n.
fn lp_ratio(n: f64) -> Result<f64, AnalysisError> {
    let l = log_prime(n)?;
    Ok(l / log_prime(l)?)
}

fn positive(name: &str, x: f64) -> Result<(), AnalysisError> {
    if x.is_nan() || x < 0.0 {
        return Err(AnalysisError::DomainError(format!("{name} = {x} is negative")));
    }
    Ok(())
}

/// C(|W| + |W_t| + log₂t / log₂log₂t), t ≥ 4.
pub fn bound_width_lemma2(c: f64, w: usize, wt: usize, t: u64) -> Result<f64, AnalysisError> {
    positive("C", c)?;
    if t < 4 {
        return Err(AnalysisError::DomainError(format!("t = {t} < 4")));
    }
    let l = (t as f64).log2();
    Ok(c * (w as f64 + wt as f64 + l / l.log2()))
}

/// C·t·(|W_0|_a + |W_t|_a).
pub fn bound_area_lemma3(c: f64, t: u64, w0_a: usize, wt_a: usize) -> Result<f64, AnalysisError> {
    positive("C", c)?;
    Ok(c * t as f64 * (w0_a + wt_a) as f64)
}

/// C·h·(|W|_a + |W'|_a + log'n / log'log'n + 1).
pub fn bound_area_lemma4(c: f64, h: u64, w_a: usize, wp_a: usize, n: f64) -> Result<f64, AnalysisError> {
    positive("C", c)?;
    Ok(c * h as f64 * (w_a as f64 + wp_a as f64 + lp_ratio(n)? + 1.0))
}

/// M·n²·log'n / log'log'n + M·log'n / log'log'n·E.
pub fn bound_area_lemma5(m: f64, n: f64, e: f64) -> Result<f64, AnalysisError> {
    positive("M", m)?;
    positive("E", e)?;
    let q = lp_ratio(n)?;
    Ok(m * n * n * q + m * q * e)
}

/// The m of the lemma-6 bound: R·g(g(r−1))·log'n.
pub fn lemma6_m(n: f64, r: usize, big_r: f64, g: &GTable) -> Result<f64, AnalysisError> {
    if r == 0 {
        return Err(AnalysisError::DomainError("r must be at least 1".into()));
    }
    let inner = g.require(r - 1)? as usize;
    let gg = g.require(inner)?;
    Ok(big_r * gg as f64 * log_prime(n)?)
}

/// M(n² + m²·log'm) + M·E with m from [`lemma6_m`].
pub fn bound_area_lemma6(m: f64, n: f64, r: usize, big_r: f64, e: f64, g: &GTable) -> Result<f64, AnalysisError> {
    positive("M", m)?;
    positive("E", e)?;
    let mm = lemma6_m(n, r, big_r, g)?;
    Ok(m * (n * n + mm * mm * log_prime(mm)?) + m * e)
}

/// Both sides of g(g(r−1))² ≤ g(g(r)).
#[derive(Debug, Clone, PartialEq)]
pub struct GgCheck {
    pub r: usize,
    pub lhs: u128,
    pub rhs: u128,
    pub holds: bool,
    /// (2^{g(r−1)})² ≤ 6·2^{g(r)}: the Lemma-1 windows allow the inequality.
    pub window_ok: bool,
}

pub fn check_gg_inequality(g: &GTable, r: usize) -> Result<GgCheck, AnalysisError> {
    if r == 0 {
        return Err(AnalysisError::DomainError("r must be at least 1".into()));
    }
    let a = g.require(r - 1)?;
    let b = g.require(r)?;
    let lhs = (g.require(a as usize)? as u128).pow(2);
    let rhs = g.require(b as usize)? as u128;
    let window_ok = 2.0 * a as f64 <= b as f64 + 6f64.log2();
    Ok(GgCheck {
        r,
        lhs,
        rhs,
        holds: lhs <= rhs,
        window_ok,
    })
}

/// One interval [d/λ, λd] with d = n^{3/4}, λ = n^ε.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub i: usize,
    pub n: u64,
    pub d: f64,
    pub lambda: f64,
    pub lo: f64,
    pub hi: f64,
    /// Dispersion ceiling used in reports: E ≤ n².
    pub e_cap: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_nonempty(&self) -> bool {
        self.lo < self.hi
    }
}

fn check_epsilon(eps: f64) -> Result<(), AnalysisError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(AnalysisError::DomainError(format!("epsilon {eps} must be positive")));
    }
    if eps >= 0.25 {
        return Err(AnalysisError::EpsilonTooLarge(eps));
    }
    Ok(())
}

/// The interval around `n` (index `i` is only carried along).
pub fn interval_for(i: usize, n: u64, eps: f64) -> Result<Interval, AnalysisError> {
    check_epsilon(eps)?;
    let nf = n as f64;
    let d = nf.powf(0.75);
    let lambda = nf.powf(eps);
    Ok(Interval {
        i,
        n,
        d,
        lambda,
        lo: d / lambda,
        hi: lambda * d,
        e_cap: nf * nf,
    })
}

/// n_i = g(g(i)) for i = 1..=i_max and the interval around each.
pub fn lemcool_intervals(g: &GTable, i_max: usize, eps: f64) -> Result<Vec<Interval>, AnalysisError> {
    check_epsilon(eps)?;
    (1..=i_max)
        .map(|i| {
            let inner = g.require(i)? as usize;
            interval_for(i, g.require(inner)?, eps)
        })
        .collect()
}

/// Every sample n lying in some interval has area(n) ≤ c·n². Vacuously
/// true when no sample lies in an interval.
pub fn check_p1(samples: &BTreeMap<u64, f64>, c: f64, intervals: &[Interval]) -> bool {
    samples.iter().all(|(&n, &area)| {
        let nf = n as f64;
        !intervals.iter().any(|iv| iv.contains(nf)) || area <= c * nf * nf
    })
}

/// Samples lying in at least one interval.
pub fn samples_in_intervals(samples: &BTreeMap<u64, f64>, intervals: &[Interval]) -> usize {
    samples
        .keys()
        .filter(|&&n| intervals.iter().any(|iv| iv.contains(n as f64)))
        .count()
}

/// Smallest C with measured ≤ C·bound(C = 1) on every pair; pairs with a
/// zero unit bound are skipped.
pub fn fit_constant(pairs: &[(f64, f64)]) -> f64 {
    pairs
        .iter()
        .filter(|(unit, _)| *unit > 0.0)
        .map(|(unit, measured)| measured / unit)
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub title: String,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(title: impl Into<String>) -> Self {
        BoundReport {
            title: title.into(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        for c in &self.checks {
            writeln!(f, "  [{}] {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail)?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

/// A row of `bounds-report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub lemma: String,
    pub inputs: String,
    pub formula_value: f64,
    pub measured_value: Option<f64>,
    pub pass: bool,
}

impl BoundRow {
    pub const CSV_HEADER: &'static str = "lemma,inputs,formula_value,measured_value,pass";

    pub fn to_csv(&self) -> String {
        let measured = self.measured_value.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},\"{}\",{},{},{}",
            self.lemma, self.inputs, self.formula_value, measured, self.pass
        )
    }
}

pub fn intervals_csv(intervals: &[Interval]) -> String {
    let mut s = String::from("i,n,d,lambda,lo,hi,e_cap\n");
    for iv in intervals {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            iv.i, iv.n, iv.d, iv.lambda, iv.lo, iv.hi, iv.e_cap
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adding::GEntry;

    fn bw(s: &str) -> BaseWord {
        BaseWord::parse(s).unwrap()
    }

    #[test]
    fn predicate_examples() {
        let b = vec![bw("Q1Q2Q1")];
        assert!(is_covered(&b, &bw("Q1Q2Q1")));
        assert!(!is_covered(&[bw("Q1Q2")], &bw("Q1Q2")));
        assert!(is_narrow(&b, &bw("Q2Q3")));
        assert!(!is_narrow(&b, &bw("Q3Q1Q2Q1")));
        assert!(is_tight(&b, &bw("Q3Q1Q2Q1")));
        assert!(is_tight(&b, &bw("Q1Q2Q1")));
        assert!(!is_tight(&b, &bw("Q3Q3")));
        assert_eq!(bw("Q1 Q2").to_string(), "Q1Q2");
    }

    #[test]
    fn log_prime_values() {
        assert_eq!(log_prime(1.0).unwrap(), 1.0);
        assert_eq!(log_prime(2.0).unwrap(), 1.0);
        assert_eq!(log_prime(8.0).unwrap(), 3.0);
        assert!(matches!(log_prime(0.0), Err(AnalysisError::NonPositive(_))));
    }

    #[test]
    fn formula_spot_values() {
        assert_eq!(bound_width_lemma2(1.0, 2, 2, 16).unwrap(), 6.0);
        assert!(bound_width_lemma2(1.0, 2, 2, 3).is_err());
        assert_eq!(bound_area_lemma3(2.0, 5, 1, 3).unwrap(), 40.0);
        assert_eq!(bound_area_lemma5(1.0, 4.0, 0.0).unwrap(), 32.0);
    }

    #[test]
    fn gg_needs_entries() {
        let mut g = GTable::default();
        g.insert(0, GEntry::bare(1)).unwrap();
        assert_eq!(check_gg_inequality(&g, 1), Err(AnalysisError::GTableMiss(1)));
        g.insert(1, GEntry::bare(5)).unwrap();
        g.insert(5, GEntry::bare(125)).unwrap();
        let c = check_gg_inequality(&g, 1).unwrap();
        assert_eq!((c.lhs, c.rhs, c.holds, c.window_ok), (25, 125, true, true));
        assert_eq!(check_gg_inequality(&g, 2), Err(AnalysisError::GTableMiss(2)));
    }

    #[test]
    fn epsilon_guard() {
        let g = GTable::default();
        assert_eq!(lemcool_intervals(&g, 1, 0.3), Err(AnalysisError::EpsilonTooLarge(0.3)));
        let iv = interval_for(1, 125, 0.2).unwrap();
        assert!(iv.is_nonempty());
        assert!((iv.lo - 125f64.powf(0.55)).abs() < 1e-9);
    }

    #[test]
    fn area_of_empty_computation() {
        use crate::adding::{base_alphabet, build_adding};
        let z = build_adding(&base_alphabet(&["a"])).unwrap();
        let w = z.parse("L p(1) R").unwrap();
        let c = Computation::start(w.clone());
        assert_eq!(area_estimate(&c, 3), 0);
        assert_eq!(width(&c), 0);
        let run = z.canonical_run(&crate::word::GroupWord::empty(), None).unwrap();
        assert_eq!(area_estimate(&run.computation, 3), 3);
    }
}
