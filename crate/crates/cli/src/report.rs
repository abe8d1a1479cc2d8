//! The JSON report printed by every command.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub config: Value,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub summary: Vec<String>,
    pub output: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl Report {
    pub fn new(command: &str, inputs: &[&[u8]], config: Value) -> Report {
        let mut h = Sha256::new();
        for input in inputs {
            h.update((input.len() as u64).to_le_bytes());
            h.update(input);
        }
        Report {
            command: command.to_string(),
            inputs_digest: hex::encode(h.finalize()),
            config,
            checks: Vec::new(),
            summary: Vec::new(),
            output: Value::Null,
            timing_ms: None,
        }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, witness: Option<Value>) {
        self.checks.push(Check { name: name.into(), pass, witness });
    }

    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}
