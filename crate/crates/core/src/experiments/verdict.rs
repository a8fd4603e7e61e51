use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: String,
    pub passed: bool,
    pub measured: BTreeMap<String, Value>,
    pub detail: String,
}

impl Criterion {
    pub fn new(id: &str, passed: bool, detail: impl Into<String>) -> Self {
        Criterion { id: id.into(), passed, measured: BTreeMap::new(), detail: detail.into() }
    }

    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.measured.insert(name.into(), value.into());
        self
    }

    /// Measured number, if recorded as one.
    pub fn number(&self, name: &str) -> Option<f64> {
        self.measured.get(name).and_then(Value::as_f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    pub experiment: String,
    pub tool: String,
    pub version: String,
    /// SHA-256 of the normalized config JSON.
    pub config_hash: String,
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<Criterion>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl VerdictFile {
    pub fn criterion(&self, id: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.id == id)
    }
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(config.to_json().as_bytes()))
}
