//! Command implementations behind the `quotforge` binary. Every command
//! returns a [`Report`] whose JSON form is deterministic: rationals as `"p/q"`
//! strings and object keys sorted.

pub mod adf_cmd;
pub mod compute;
pub mod config;
pub mod forge;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{RunConfig, CONFIG_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: malformed JSON: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error(transparent)]
    Adf(#[from] quotforge::adf::AdfError),
    #[error(transparent)]
    Geom(#[from] quotforge::geom::GeomError),
    #[error(transparent)]
    Forcing(#[from] quotforge::forcing::ForcingError),
    #[error(transparent)]
    Linalg(#[from] quotforge::linalg::LinalgError),
}

impl CliError {
    /// Process exit code; 1 is reserved for reports with failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Json { .. } => 3,
            _ => 4,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: p.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: p, source })
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Output of one command: the payload, the config it ran under and the
/// number of failed checks.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub result: Value,
    pub failures: usize,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig, result: Value, failures: usize) -> Self {
        Report { command: command.into(), config: config.clone(), result, failures }
    }

    pub fn to_value(&self) -> Value {
        json!({
            "command": self.command,
            "config": to_value(&self.config),
            "result": self.result,
            "failures": self.failures,
        })
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        // serde_json's map is ordered by key unless `preserve_order` is enabled
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("values serialize");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures == 0 {
            0
        } else {
            1
        }
    }
}

/// The `result` object of a report file, or the whole document when it is
/// not a report.
pub fn read_payload(path: &Path) -> Result<Value, CliError> {
    let v: Value = read_json(path)?;
    Ok(match v {
        Value::Object(mut m) if m.contains_key("command") && m.contains_key("result") => m.remove("result").unwrap_or(Value::Null),
        other => other,
    })
}

pub(crate) fn from_payload<T: DeserializeOwned>(path: &Path, v: Value) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|source| CliError::Json { path: path.display().to_string(), source })
}
