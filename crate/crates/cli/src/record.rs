//! Result records printed by every command, one JSON object per line.
//!
//! Reals use the shortest representation that parses back to the same `f64`,
//! so records round-trip bit for bit. Infinite values serialize as `null`
//! together with status `"infinite"`.

use std::collections::BTreeMap;

use resbench_core::monotones::Extended;
use resbench_core::HermitianOperator;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::io::{matrix_to_rows, Complex};

pub const TOOL_VERSION: &str = concat!("resbench ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    /// SHA-256 of each input file, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub values: BTreeMap<String, Value>,
    pub status: String,
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Vec<Complex>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
    pub tool_version: String,
}

impl ResultRecord {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            values: BTreeMap::new(),
            status: "optimal".to_string(),
            gap: 0.0,
            witness: None,
            timing_ms: None,
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    pub fn input(&mut self, role: &str, digest: &str) -> &mut Self {
        self.inputs.insert(role.to_string(), digest.to_string());
        self
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.values.insert(key.to_string(), v.into());
        self
    }

    pub fn set_real(&mut self, key: &str, v: f64) -> &mut Self {
        self.set(key, real(v))
    }

    pub fn set_extended(&mut self, key: &str, v: Extended) -> &mut Self {
        self.set(key, extended(v))
    }

    pub fn set_witness(&mut self, w: &HermitianOperator) -> &mut Self {
        self.witness = Some(matrix_to_rows(w));
        self
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records contain only finite reals")
    }
}

/// Finite reals as numbers, anything else as `null`.
pub fn real(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

pub fn extended(v: Extended) -> Value {
    match v {
        Extended::Finite(x) => real(x),
        Extended::Infinite => Value::Null,
    }
}
