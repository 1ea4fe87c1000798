use std::path::Path;

use clap::Args;
use serde_json::Value;

use smachine_core::presentation::{generate_presentation, HubParams, PresentationError, Specials};

use crate::output::{sha256_hex, write_atomic, Header};
use crate::{config, load_machine, Failure, Outcome};

#[derive(Debug, Clone, Args)]
pub struct PresentArgs {
    #[arg(long)]
    pub machine: String,
    /// Accepting word W_0 of the hub relator.
    #[arg(long)]
    pub w0: Option<String>,
    /// N: the hub word uses kappa1..kappa{2N}.
    #[arg(long, default_value_t = 1)]
    pub kappa_n: usize,
    /// Add alpha, omega, delta to the generators.
    #[arg(long)]
    pub specials: bool,
}

pub fn cmd_present(a: &PresentArgs, out: &Path, seed: u64) -> Result<Outcome, Failure> {
    let lm = load_machine(&a.machine)?;
    let w0 = a.w0.as_deref().ok_or_else(|| Failure::Input("--w0 is required".into()))?;
    let w0 = lm
        .machine
        .hardware()
        .parse_admissible_str(w0)
        .map_err(|e| Failure::Input(format!("W_0: {e}")))?;
    let header = Header::new(
        &config(
            "present",
            &[
                ("machine_sha256", Value::from(sha256_hex(lm.source.as_bytes()))),
                ("w0", Value::from(w0.to_string())),
                ("kappa_n", Value::from(a.kappa_n)),
                ("specials", Value::from(a.specials)),
            ],
        ),
        seed,
    );
    let p = generate_presentation(
        &lm.machine,
        &HubParams { n: a.kappa_n, w0 },
        a.specials.then(Specials::standard),
    )
    .map_err(|e| match e {
        PresentationError::Machine(_) => Failure::Verification(e.to_string()),
        other => Failure::Input(other.to_string()),
    })?;
    let path = write_atomic(out, "presentation.txt", &(header.line("!") + &p.to_text()))?;
    Ok(Outcome {
        files: vec![path],
        summary: format!("{} generators, {} relators\n", p.generators.len(), p.relators.len()),
    })
}
