use std::path::Path;

use clap::{Args, ValueEnum};
use serde_json::Value;

use smachine_core::machine::{run, Halt, RunError, StepGuard, Strategy, DEFAULT_VISITED_CAPACITY};
use smachine_core::{AdmissibleWord, Computation, GroupWord, Machine};

use crate::output::{sha256_hex, write_atomic, Header};
use crate::{config, load_machine, Failure, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Det,
    Bfs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GuardArg {
    Any,
    LengthPreserving,
    NonIncreasing,
}

impl From<GuardArg> for StepGuard {
    fn from(g: GuardArg) -> Self {
        match g {
            GuardArg::Any => StepGuard::Any,
            GuardArg::LengthPreserving => StepGuard::LengthPreserving,
            GuardArg::NonIncreasing => StepGuard::NonIncreasing,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Machine JSON file, or `adding:a,b` for the adding machine.
    #[arg(long)]
    pub machine: String,
    /// Start word, e.g. "L a.0 p(1) R".
    #[arg(long)]
    pub start: String,
    /// Stop at the first word whose flat form contains these symbols.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_enum, default_value = "det")]
    pub strategy: StrategyArg,
    /// Deterministic runs only: filter on candidate steps.
    #[arg(long, value_enum, default_value = "any")]
    pub guard: GuardArg,
    /// Step budget (path length for bfs).
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    /// bfs only: longest word explored.
    #[arg(long)]
    pub max_word_len: Option<usize>,
}

fn contains(hay: &GroupWord, needle: &GroupWord) -> bool {
    let (h, n) = (hay.symbols(), needle.symbols());
    n.is_empty() || h.windows(n.len()).any(|w| w == n)
}

fn write_trace(m: &Machine, c: &Computation, header: &Header, out: &Path) -> Result<std::path::PathBuf, Failure> {
    let mut s = header.json().to_string();
    s.push('\n');
    for rec in c.trace_records(m) {
        s.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        s.push('\n');
    }
    write_atomic(out, "trace.jsonl", &s)
}

pub fn cmd_simulate(a: &SimulateArgs, out: &Path, seed: u64) -> Result<Outcome, Failure> {
    let lm = load_machine(&a.machine)?;
    let m = &lm.machine;
    let hw = m.hardware();
    let start: AdmissibleWord = hw
        .parse_admissible_str(&a.start)
        .map_err(|e| Failure::Input(format!("start word: {e}")))?;
    let target = match &a.target {
        Some(t) => Some(hw.parse_word(t).map_err(|e| Failure::Input(format!("target: {e}")))?),
        None => None,
    };
    let header = Header::new(
        &config(
            "simulate",
            &[
                ("machine_sha256", Value::from(sha256_hex(lm.source.as_bytes()))),
                ("start", Value::from(a.start.clone())),
                ("target", a.target.clone().map(Value::from).unwrap_or(Value::Null)),
                ("strategy", Value::from(format!("{:?}", a.strategy))),
                ("guard", Value::from(format!("{:?}", a.guard))),
                ("budget", Value::from(a.budget)),
                ("max_word_len", a.max_word_len.map(Value::from).unwrap_or(Value::Null)),
            ],
        ),
        seed,
    );
    let pred = |w: &AdmissibleWord| target.as_ref().is_some_and(|t| contains(&w.flatten(), t));
    let strategy = match a.strategy {
        StrategyArg::Det => Strategy::Deterministic {
            priority: m.positive_ids().collect(),
            guard: a.guard.into(),
            until: target.as_ref().map(|_| &pred as _),
        },
        StrategyArg::Bfs => {
            if target.is_none() {
                return Err(Failure::Input("--strategy bfs needs --target".into()));
            }
            Strategy::SearchTarget {
                target: &pred,
                rules: None,
                max_word_len: a.max_word_len,
                capacity: DEFAULT_VISITED_CAPACITY,
            }
        }
    };
    match run(m, start, &strategy, a.budget) {
        Ok(c) => {
            let path = write_trace(m, &c, &header, out)?;
            let halt = match c.halt {
                Halt::Reached => "target reached",
                Halt::NoApplicableRule => "no applicable rule",
                Halt::Unspecified => "stopped",
            };
            Ok(Outcome {
                files: vec![path],
                summary: format!("{} steps, {halt}\nfinal: {}\n", c.len(), c.last()),
            })
        }
        Err(RunError::BudgetExceeded(partial)) => {
            write_trace(m, &partial, &header, out)?;
            Err(Failure::Resource(format!("budget of {} steps exhausted", a.budget)))
        }
        Err(RunError::NotFound { explored }) => Err(Failure::Resource(format!(
            "target not reached within the caps ({explored} words explored)"
        ))),
        Err(RunError::Machine(e)) => Err(Failure::Input(e.to_string())),
    }
}
