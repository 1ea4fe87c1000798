use std::path::Path;

use clap::Args;
use serde_json::Value;

use smachine_core::adding::{base_alphabet, build_adding, AddingError, GTable};
use smachine_core::analysis::{check_gg_inequality, BoundReport, GgCheck};

use crate::output::{write_atomic, Header};
use crate::{config, read_input, Failure, Outcome};

/// Largest n accepted by `--n-max`.
pub const N_MAX_LIMIT: usize = 20;

#[derive(Debug, Clone, Args)]
pub struct AddingVerifyArgs {
    #[arg(long, default_value_t = 10)]
    pub n_max: usize,
    /// Also check g(g(1))² ≤ g(g(2)).
    #[arg(long)]
    pub deep: bool,
    /// Base alphabet of the adding machine.
    #[arg(long, default_value = "a", value_delimiter = ',')]
    pub alphabet: Vec<String>,
    /// g-table whose rows replace measured values before checking.
    #[arg(long)]
    pub g_table: Option<std::path::PathBuf>,
    /// Record wall-clock times in the g-table (outputs stop being byte-stable).
    #[arg(long)]
    pub timing: bool,
}

/// Everything `adding-verify` computes, before any file is written.
#[derive(Debug, Clone)]
pub struct VerifyResult {
    pub table: GTable,
    pub reports: Vec<BoundReport>,
    pub gg: Vec<GgCheck>,
    pub violations: Vec<(usize, u64)>,
}

impl VerifyResult {
    pub fn pass(&self) -> bool {
        self.violations.is_empty() && self.reports.iter().all(BoundReport::pass) && self.gg.iter().all(|g| g.holds)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.reports {
            s.push_str(&r.to_string());
        }
        for (n, g) in &self.violations {
            s.push_str(&format!("window violated: g({n}) = {g}\n"));
        }
        for c in &self.gg {
            s.push_str(&format!(
                "g(g({}))^2 <= g(g({})): {} <= {} {}\n",
                c.r - 1,
                c.r,
                c.lhs,
                c.rhs,
                if c.holds { "pass" } else { "FAIL" }
            ));
        }
        s.push_str(if self.pass() { "result: pass\n" } else { "result: FAIL\n" });
        s
    }
}

fn adding_failure(e: AddingError) -> Failure {
    match e {
        AddingError::BoundViolation { .. } => Failure::Verification(e.to_string()),
        AddingError::Run(_) => Failure::Resource(e.to_string()),
        AddingError::InvalidAlphabet(_) | AddingError::NotPositiveOverA0(_) => Failure::Input(e.to_string()),
        other => Failure::Verification(other.to_string()),
    }
}

/// Measures g(0..=n_max), runs the per-run checks, and checks the gg
/// inequality for r = 1 (and r = 2 when `deep`). Rows of `injected` override
/// measured values, which is how a corrupted table is fed in.
pub fn verify(alphabet: &[String], n_max: usize, deep: bool, injected: Option<&GTable>) -> Result<VerifyResult, Failure> {
    if n_max > N_MAX_LIMIT {
        return Err(Failure::Input(format!("--n-max {n_max} exceeds {N_MAX_LIMIT}")));
    }
    let names: Vec<&str> = alphabet.iter().map(String::as_str).collect();
    let z = build_adding(&base_alphabet(&names)).map_err(adding_failure)?;
    let ns: Vec<usize> = (0..=n_max).collect();
    let reports = ns
        .iter()
        .map(|&n| z.verify_lemma1(&z.power_word(n)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(adding_failure)?;
    let mut table = z.measure_many(&ns).map_err(adding_failure)?;
    if let Some(inj) = injected {
        for (n, e) in inj.entries() {
            table.force(n, e.g);
        }
    }
    let rs: &[usize] = if deep { &[1, 2] } else { &[1] };
    let mut gg = Vec::new();
    for &r in rs {
        // Skip measuring when an injected value is absurdly large.
        let needed = [r - 1, r].iter().filter_map(|&k| table.get(k)).max().unwrap_or(0);
        if needed > 40 {
            return Err(Failure::Verification(format!(
                "g({r}) = {needed} makes g(g({r})) unmeasurable"
            )));
        }
        z.measure_for_gg(&mut table, r).map_err(adding_failure)?;
        gg.push(check_gg_inequality(&table, r).map_err(|e| Failure::Verification(e.to_string()))?);
    }
    let violations = table.window_violations();
    Ok(VerifyResult {
        table,
        reports,
        gg,
        violations,
    })
}

pub fn cmd_adding_verify(a: &AddingVerifyArgs, out: &Path, seed: u64) -> Result<Outcome, Failure> {
    let injected = match &a.g_table {
        Some(p) => Some(GTable::from_csv(&read_input(p)?).map_err(Failure::Input)?),
        None => None,
    };
    let header = Header::new(
        &config(
            "adding-verify",
            &[
                ("n_max", Value::from(a.n_max)),
                ("deep", Value::from(a.deep)),
                ("alphabet", Value::from(a.alphabet.clone())),
                ("g_table", Value::from(injected.as_ref().map(|t| t.to_csv(true)))),
                ("timing", Value::from(a.timing)),
            ],
        ),
        seed,
    );
    let res = verify(&a.alphabet, a.n_max, a.deep, injected.as_ref())?;
    let mut files = Vec::new();
    files.push(write_atomic(out, "g-table.csv", &(header.line("#") + &res.table.to_csv(a.timing)))?);
    let summary = res.summary();
    files.push(write_atomic(out, "summary.txt", &(header.line("#") + &summary))?);
    if !res.pass() {
        return Err(Failure::Verification(format!("adding-machine checks failed\n{summary}")));
    }
    Ok(Outcome { files, summary })
}
