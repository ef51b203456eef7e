//! File I/O, digests, exit codes and report assembly.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_PRECONDITION: u8 = 3;
pub const EXIT_TIMEOUT: u8 = 4;
pub const EXIT_INFEASIBLE: u8 = 5;

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Precondition(String),
    Timeout(String),
    Infeasible(String),
    Rejected(String),
    Other(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Precondition(_) => EXIT_PRECONDITION,
            CliError::Timeout(_) => EXIT_TIMEOUT,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Rejected(_) | CliError::Other(_) => EXIT_OTHER,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "invalid input: {m}"),
            CliError::Precondition(m) => write!(f, "precondition failed: {m}"),
            CliError::Timeout(m) => write!(f, "timed out: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Rejected(m) => write!(f, "rejected: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

/// A JSON input file with its bytes kept for the digest.
pub struct Input<T> {
    pub value: T,
    pub digest: String,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Input<T>, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let value = serde_json::from_slice(&bytes).map_err(|e| {
        // serde_json reports "... at line L column C"
        CliError::Parse(format!("{}: {e}", path.display()))
    })?;
    Ok(Input {
        value,
        digest: hex::encode(Sha256::digest(&bytes)),
    })
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, to_pretty(value))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Deterministic report body plus a separate wall-clock section. Printed to
/// stdout and optionally written to `out`.
pub fn emit(
    command: &str,
    inputs: &[(&Path, &str)],
    config: Value,
    outputs: Value,
    elapsed_s: f64,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    let report = json!({
        "command": command,
        "inputs": inputs
            .iter()
            .map(|(p, d)| json!({"path": p.display().to_string(), "sha256": d}))
            .collect::<Vec<_>>(),
        "config": config,
        "outputs": outputs,
        "timing": {"elapsed_s": elapsed_s},
    });
    let text = to_pretty(&report);
    print!("{text}");
    if let Some(path) = out {
        write_text(path, &text)?;
    }
    Ok(())
}
