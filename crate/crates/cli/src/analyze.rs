use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;

use smachine_core::adding::GTable;
use smachine_core::analysis::{
    all_base_words, area_estimate, bound_area_lemma3, bound_area_lemma5, bound_area_lemma6, bound_width_lemma2,
    check_p1, intervals_csv, is_covered, is_narrow, is_tight_with, lemcool_intervals, width, AnalysisError, BaseWord,
    BoundRow, TightReading,
};
use smachine_core::machine::TraceRecord;
use smachine_core::Computation;

use crate::output::{sha256_hex, write_atomic, Header};
use crate::{config, load_machine, read_input, Failure, Outcome};

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Machine of `--trace`.
    #[arg(long)]
    pub machine: Option<String>,
    /// Trace written by `simulate`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Base words, e.g. Q1Q2Q1,Q2Q3Q2.
    #[arg(long, value_delimiter = ',')]
    pub bases: Vec<String>,
    /// Number of part letters for the predicate sweep.
    #[arg(long, default_value_t = 3)]
    pub parts: u32,
    /// Longest base word in the predicate sweep.
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    /// Sample this many random words instead of the exhaustive sweep.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Values of n for the area bounds.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<f64>,
    /// Dispersion E; defaults to n².
    #[arg(long)]
    pub dispersion: Option<f64>,
    /// r of the g(g(r−1)) term; needs `--g-table`.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub g_table: Option<PathBuf>,
    /// Interval exponent ε (< 1/4); needs `--g-table`.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Number of intervals, n_i = g(g(i)) for i = 1..=i_max.
    #[arg(long, default_value_t = 1)]
    pub i_max: usize,
    /// CSV of `n,area` samples for the P1 check (uses constant c).
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// JSON file with any of C, M, R, c, epsilon.
    #[arg(long)]
    pub constants: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(rename = "C", default = "one")]
    pub big_c: f64,
    #[serde(rename = "M", default = "one")]
    pub m: f64,
    #[serde(rename = "R", default = "one")]
    pub big_r: f64,
    #[serde(default = "one")]
    pub c: f64,
    pub epsilon: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            big_c: 1.0,
            m: 1.0,
            big_r: 1.0,
            c: 1.0,
            epsilon: None,
        }
    }
}

fn analysis_failure(e: AnalysisError) -> Failure {
    match e {
        AnalysisError::GTableMiss(_) => Failure::Resource(e.to_string()),
        other => Failure::Input(other.to_string()),
    }
}

fn load_trace(text: &str) -> Result<Vec<TraceRecord>, Failure> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .filter(|l| !l.contains("\"tool\""))
        .map(|l| serde_json::from_str(l).map_err(|e| Failure::Input(format!("trace line: {e}"))))
        .collect()
}

fn parse_samples(text: &str) -> Result<BTreeMap<u64, f64>, Failure> {
    let mut out = BTreeMap::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        if line.trim() == "n,area" {
            continue;
        }
        let (n, a) = line
            .split_once(',')
            .ok_or_else(|| Failure::Input(format!("bad sample row `{line}`")))?;
        let n: u64 = n.trim().parse().map_err(|_| Failure::Input(format!("bad n in `{line}`")))?;
        let a: f64 = a.trim().parse().map_err(|_| Failure::Input(format!("bad area in `{line}`")))?;
        out.insert(n, a);
    }
    Ok(out)
}

/// One CSV row per word: covered, narrow, tight under both readings.
pub fn predicate_rows(bases: &[BaseWord], words: &[BaseWord]) -> String {
    let mut s = String::from("word,covered,narrow,tight_prefix,tight_whole\n");
    for w in words {
        s.push_str(&format!(
            "{w},{},{},{},{}\n",
            is_covered(bases, w),
            is_narrow(bases, w),
            is_tight_with(bases, w, TightReading::Prefix),
            is_tight_with(bases, w, TightReading::WholeWord)
        ));
    }
    s
}

pub fn cmd_analyze(a: &AnalyzeArgs, out: &Path, seed: u64) -> Result<Outcome, Failure> {
    let consts = match &a.constants {
        Some(p) => serde_json::from_str::<Constants>(&read_input(p)?)
            .map_err(|e| Failure::Input(format!("constants: {e}")))?,
        None => Constants::default(),
    };
    let g_text = a.g_table.as_ref().map(|p| read_input(p)).transpose()?;
    let g = g_text
        .as_deref()
        .map(GTable::from_csv)
        .transpose()
        .map_err(Failure::Input)?;
    let trace_text = a.trace.as_ref().map(|p| read_input(p)).transpose()?;
    let samples_text = a.samples.as_ref().map(|p| read_input(p)).transpose()?;
    let machine = a.machine.as_deref().map(load_machine).transpose()?;
    let epsilon = a.epsilon.or(consts.epsilon);

    let hash = |t: &Option<String>| t.as_deref().map(|s| Value::from(sha256_hex(s.as_bytes()))).unwrap_or(Value::Null);
    let header = Header::new(
        &config(
            "analyze",
            &[
                ("machine_sha256", machine.as_ref().map(|m| Value::from(sha256_hex(m.source.as_bytes()))).unwrap_or(Value::Null)),
                ("trace_sha256", hash(&trace_text)),
                ("g_table_sha256", hash(&g_text)),
                ("samples_sha256", hash(&samples_text)),
                ("bases", Value::from(a.bases.clone())),
                ("parts", Value::from(a.parts)),
                ("max_len", Value::from(a.max_len)),
                ("sample", a.sample.map(Value::from).unwrap_or(Value::Null)),
                ("n", Value::from(a.n.clone())),
                ("dispersion", a.dispersion.map(Value::from).unwrap_or(Value::Null)),
                ("r", a.r.map(Value::from).unwrap_or(Value::Null)),
                ("epsilon", epsilon.map(Value::from).unwrap_or(Value::Null)),
                ("i_max", Value::from(a.i_max)),
                ("C", Value::from(consts.big_c)),
                ("M", Value::from(consts.m)),
                ("R", Value::from(consts.big_r)),
                ("c", Value::from(consts.c)),
            ],
        ),
        seed,
    );

    let mut files = Vec::new();
    let mut rows: Vec<BoundRow> = Vec::new();
    let mut summary = String::new();
    let mut did_something = false;

    if let Some(text) = &trace_text {
        let lm = machine
            .as_ref()
            .ok_or_else(|| Failure::Input("--trace needs --machine".into()))?;
        let comp = Computation::from_records(&lm.machine, &load_trace(text)?).map_err(|e| Failure::Input(e.to_string()))?;
        let mut csv = header.line("#");
        csv.push_str("index,length,a_length\n");
        for (i, w) in comp.words.iter().enumerate() {
            csv.push_str(&format!("{i},{},{}\n", w.len(), w.a_length()));
        }
        files.push(write_atomic(out, "metrics.csv", &csv)?);
        let t = comp.len() as u64;
        let (w0a, wta) = (comp.first().a_length(), comp.last().a_length());
        let wd = width(&comp);
        let area = area_estimate(&comp, lm.machine.hardware().n_parts());
        summary.push_str(&format!("trace: t = {t}, width = {wd}, area estimate = {area}\n"));
        if t >= 4 {
            let b = bound_width_lemma2(consts.big_c, w0a, wta, t).map_err(analysis_failure)?;
            rows.push(BoundRow {
                lemma: "lemma2".into(),
                inputs: format!("C={} |W0|_a={w0a} |Wt|_a={wta} t={t}", consts.big_c),
                formula_value: b,
                measured_value: Some(wd as f64),
                pass: wd as f64 <= b,
            });
        }
        let b = bound_area_lemma3(consts.big_c, t, w0a, wta).map_err(analysis_failure)?;
        rows.push(BoundRow {
            lemma: "lemma3".into(),
            inputs: format!("C={} t={t} |W0|_a={w0a} |Wt|_a={wta}", consts.big_c),
            formula_value: b,
            measured_value: Some(area as f64),
            pass: area as f64 <= b,
        });
        did_something = true;
    }

    if !a.bases.is_empty() {
        let bases = a
            .bases
            .iter()
            .map(|b| BaseWord::parse(b).map_err(Failure::Input))
            .collect::<Result<Vec<_>, _>>()?;
        if a.parts == 0 || a.max_len == 0 {
            return Err(Failure::Input("--parts and --max-len must be positive".into()));
        }
        let words = match a.sample {
            None => all_base_words(a.parts, a.max_len),
            Some(k) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..k)
                    .map(|_| {
                        let len = rng.gen_range(1..=a.max_len);
                        BaseWord((0..len).map(|_| rng.gen_range(0..a.parts)).collect())
                    })
                    .collect()
            }
        };
        files.push(write_atomic(out, "predicates.csv", &(header.line("#") + &predicate_rows(&bases, &words)))?);
        summary.push_str(&format!("predicates: {} words\n", words.len()));
        did_something = true;
    }

    for &n in &a.n {
        let e = a.dispersion.unwrap_or(n * n);
        let v = bound_area_lemma5(consts.m, n, e).map_err(analysis_failure)?;
        rows.push(BoundRow {
            lemma: "lemma5".into(),
            inputs: format!("M={} n={n} E={e}", consts.m),
            formula_value: v,
            measured_value: None,
            pass: true,
        });
        if let Some(r) = a.r {
            let g = g.as_ref().ok_or_else(|| Failure::Resource("--r needs a measured --g-table".into()))?;
            let v = bound_area_lemma6(consts.m, n, r, consts.big_r, e, g).map_err(analysis_failure)?;
            rows.push(BoundRow {
                lemma: "lemma6".into(),
                inputs: format!("M={} n={n} r={r} R={} E={e}", consts.m, consts.big_r),
                formula_value: v,
                measured_value: None,
                pass: true,
            });
        }
        did_something = true;
    }

    let mut intervals = Vec::new();
    if let Some(eps) = epsilon {
        let g = g.as_ref().ok_or_else(|| Failure::Resource("--epsilon needs a measured --g-table".into()))?;
        intervals = lemcool_intervals(g, a.i_max, eps).map_err(analysis_failure)?;
        files.push(write_atomic(out, "intervals.csv", &(header.line("#") + &intervals_csv(&intervals)))?);
        let empty = intervals.iter().filter(|iv| !iv.is_nonempty()).count();
        summary.push_str(&format!("intervals: {} ({empty} empty)\n", intervals.len()));
        if empty > 0 {
            return Err(Failure::Verification(format!("{empty} empty interval(s)")));
        }
        did_something = true;
    }

    if let Some(text) = &samples_text {
        if intervals.is_empty() {
            return Err(Failure::Input("--samples needs --epsilon and --g-table".into()));
        }
        let samples = parse_samples(text)?;
        let ok = check_p1(&samples, consts.c, &intervals);
        rows.push(BoundRow {
            lemma: "P1".into(),
            inputs: format!("c={} samples={}", consts.c, samples.len()),
            formula_value: consts.c,
            measured_value: None,
            pass: ok,
        });
        did_something = true;
    }

    if !did_something {
        return Err(Failure::Input(
            "nothing to analyze: give --trace, --bases, --n or --epsilon".into(),
        ));
    }
    if !rows.is_empty() {
        let mut csv = header.line("#");
        csv.push_str(BoundRow::CSV_HEADER);
        csv.push('\n');
        for r in &rows {
            csv.push_str(&r.to_csv());
            csv.push('\n');
        }
        files.push(write_atomic(out, "bounds.csv", &csv)?);
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.lemma.as_str()).collect();
    if !failed.is_empty() {
        return Err(Failure::Verification(format!("bound rows failed: {}", failed.join(", "))));
    }
    Ok(Outcome { files, summary })
}
