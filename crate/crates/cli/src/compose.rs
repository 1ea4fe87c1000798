use std::path::Path;

use clap::Args;
use serde_json::Value;

use smachine_core::composition::{compose, ComposeError};

use crate::output::{sha256_hex, write_atomic, Header};
use crate::{config, load_machine, Failure, Outcome};

#[derive(Debug, Clone, Args)]
pub struct ComposeArgs {
    /// Machine JSON file of S.
    #[arg(long)]
    pub machine: String,
    /// S-word to lift and run through S∘Z.
    #[arg(long)]
    pub start: Option<String>,
    /// Rules of S to simulate one after another from `--start`.
    #[arg(long, value_delimiter = ',')]
    pub steps: Vec<String>,
}

fn compose_failure(e: ComposeError) -> Failure {
    match e {
        ComposeError::Sector { .. } => Failure::Resource(e.to_string()),
        ComposeError::Mismatch { .. } => Failure::Verification(e.to_string()),
        other => Failure::Input(other.to_string()),
    }
}

pub fn cmd_compose(a: &ComposeArgs, out: &Path, seed: u64) -> Result<Outcome, Failure> {
    let lm = load_machine(&a.machine)?;
    let header = Header::new(
        &config(
            "compose",
            &[
                ("machine_sha256", Value::from(sha256_hex(lm.source.as_bytes()))),
                ("start", a.start.clone().map(Value::from).unwrap_or(Value::Null)),
                ("steps", Value::from(a.steps.clone())),
            ],
        ),
        seed,
    );
    let cm = compose(&lm.machine).map_err(compose_failure)?;
    let c = cm.counts();
    let mut files = Vec::new();

    let mut doc: serde_json::Map<String, Value> =
        serde_json::from_str(&cm.machine.to_json()).expect("machine json is an object");
    doc.insert("header".into(), header.json());
    let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializes") + "\n";
    files.push(write_atomic(out, "composed.json", &text)?);

    let mut csv = header.line("#");
    csv.push_str("quantity,value\n");
    for (k, v) in [
        ("modified", c.modified),
        ("copied", c.copied),
        ("transition", c.transition),
        ("positive", c.positive),
        ("expected", c.expected),
    ] {
        csv.push_str(&format!("{k},{v}\n"));
    }
    for (i, n) in cm.p_part_sizes().iter().enumerate() {
        csv.push_str(&format!("p_part_{},{n}\n", i + 1));
    }
    files.push(write_atomic(out, "counts.csv", &csv)?);
    let mut summary = format!(
        "positive rules: {} (modified {}, copied {}, transition {}); closed form {}\n",
        c.positive, c.modified, c.copied, c.transition, c.expected
    );

    if let Some(start) = &a.start {
        let w = lm
            .machine
            .hardware()
            .parse_admissible_str(start)
            .map_err(|e| Failure::Input(format!("start word: {e}")))?;
        let ids = a
            .steps
            .iter()
            .map(|name| {
                lm.machine
                    .find(name)
                    .ok_or_else(|| Failure::Input(format!("no rule named `{name}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let runs = cm.simulate(&ids, &cm.lift_word(&w)).map_err(compose_failure)?;
        let mut csv = header.line("#");
        csv.push_str("step,rule,composed_steps,sector_steps,sector_lengths\n");
        for (k, (name, r)) in a.steps.iter().zip(&runs).enumerate() {
            let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
            csv.push_str(&format!(
                "{},{name},{},{},{}\n",
                k + 1,
                r.len(),
                join(&r.sector_steps),
                join(&r.sector_lengths)
            ));
        }
        files.push(write_atomic(out, "steps.csv", &csv)?);
        let total: usize = runs.iter().map(|r| r.len()).sum();
        summary.push_str(&format!("simulated {} S-steps in {total} composed steps\n", runs.len()));
    }
    if c.positive != c.expected {
        return Err(Failure::Verification(format!(
            "composed positive rule count {} differs from closed form {}",
            c.positive, c.expected
        )));
    }
    Ok(Outcome { files, summary })
}
