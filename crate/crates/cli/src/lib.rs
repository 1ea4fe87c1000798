//! `smw`: batch driver for the S-machine workbench.
//!
//! Exit codes: 0 success, 1 input error, 2 resource or budget exhausted,
//! 3 verification failure.

pub mod adding_verify;
pub mod analyze;
pub mod compose;
pub mod output;
pub mod present;
pub mod simulate;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::Value;
use thiserror::Error;

use smachine_core::adding::{base_alphabet, build_adding};
use smachine_core::Machine;

pub use output::Header;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Failure {
    #[error("input error: {0}")]
    Input(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Resource(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

/// What a successful subcommand wrote and a short summary for stdout.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Debug, Parser)]
#[command(name = "smw", version, about = "S-machine workbench")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "smw-out")]
    pub out: PathBuf,
    /// Seed for randomized sweeps; recorded in every output header.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a machine from a start word and write the trace as JSON lines.
    Simulate(simulate::SimulateArgs),
    /// Measure g(n) for the adding machine and check the length window.
    AddingVerify(adding_verify::AddingVerifyArgs),
    /// Compose a machine with the adding machine.
    Compose(compose::ComposeArgs),
    /// Write the group presentation of a machine.
    Present(present::PresentArgs),
    /// Metrics, base-word predicates, bound formulas and intervals.
    Analyze(analyze::AnalyzeArgs),
}

pub fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Simulate(a) => simulate::cmd_simulate(a, &cli.out, cli.seed),
        Command::AddingVerify(a) => adding_verify::cmd_adding_verify(a, &cli.out, cli.seed),
        Command::Compose(a) => compose::cmd_compose(a, &cli.out, cli.seed),
        Command::Present(a) => present::cmd_present(a, &cli.out, cli.seed),
        Command::Analyze(a) => analyze::cmd_analyze(a, &cli.out, cli.seed),
    }
}

/// A machine plus the text it was loaded from (hashed into headers).
pub struct LoadedMachine {
    pub machine: Machine,
    pub source: String,
}

/// `adding:<a,b,...>` builds the adding machine over the named letters;
/// anything else is a path to a machine JSON file.
pub fn load_machine(spec: &str) -> Result<LoadedMachine, Failure> {
    if let Some(letters) = spec.strip_prefix("adding:") {
        let names: Vec<&str> = letters.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let z = build_adding(&base_alphabet(&names)).map_err(|e| Failure::Input(e.to_string()))?;
        return Ok(LoadedMachine {
            machine: z.machine,
            source: spec.to_string(),
        });
    }
    let text = read_input(Path::new(spec))?;
    let machine = Machine::from_json(&text).map_err(|e| Failure::Input(format!("{spec}: {e}")))?;
    Ok(LoadedMachine { machine, source: text })
}

pub fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Config map for header hashing; output paths are deliberately absent.
pub fn config(command: &str, entries: &[(&str, Value)]) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    m.insert("command".to_string(), Value::from(command));
    for (k, v) in entries {
        m.insert(k.to_string(), v.clone());
    }
    m
}
