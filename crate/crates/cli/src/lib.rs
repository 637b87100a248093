//! Batch front end: runs catalog scenarios or inline specs and produces
//! `qd-report/1` JSON reports and SVG figures.

pub mod commands;
pub mod scenario;
pub mod svg;

use std::path::PathBuf;

use serde_json::{json, Value};

pub use commands::run;
pub use scenario::{catalog, find, Scenario};

pub const SCHEMA: &str = "qd-report/1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("could not parse spec: {0}")]
    SpecParse(String),
    #[error("scenario '{id}' does not support '{op}'")]
    Unsupported { id: String, op: String },
    #[error(transparent)]
    Core(#[from] qd_core::QdError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Kernel,
    Membership,
    Identity,
    QdpCheck,
    Homotopy,
    Deform,
    ChordArc,
    Catalog,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Membership => "membership",
            Command::Identity => "identity",
            Command::QdpCheck => "qdp-check",
            Command::Homotopy => "homotopy",
            Command::Deform => "deform",
            Command::ChordArc => "chord-arc",
            Command::Catalog => "catalog",
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub frames: Option<usize>,
    pub max_degree: Option<usize>,
    pub mode: Option<String>,
    pub svg: Option<PathBuf>,
}

/// Result of a run: the report body, whether verification passed, and any
/// SVG documents (file name, contents).
pub struct Outcome {
    pub result: Value,
    pub pass: bool,
    pub svgs: Vec<(String, String)>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }
}

/// Wraps a result in the report envelope.
pub fn envelope(command: Command, scenario: Option<&str>, seed: Option<u64>, outcome: &Outcome, timestamp: Option<u64>) -> Value {
    let mut v = json!({
        "schema": SCHEMA,
        "units": "dimensionless",
        "command": command.name(),
        "scenario": scenario,
        "seed": seed,
        "status": if outcome.pass { "pass" } else { "fail" },
        "exit_code": outcome.exit_code(),
        "result": outcome.result,
    });
    if let Some(t) = timestamp {
        v["timestamp"] = json!(t);
    }
    v
}

pub fn error_report(command: Command, scenario: Option<&str>, err: &CliError, timestamp: Option<u64>) -> Value {
    let mut v = json!({
        "schema": SCHEMA,
        "units": "dimensionless",
        "command": command.name(),
        "scenario": scenario,
        "status": "error",
        "exit_code": 1,
        "error": err.to_string(),
    });
    if let Some(t) = timestamp {
        v["timestamp"] = json!(t);
    }
    v
}
