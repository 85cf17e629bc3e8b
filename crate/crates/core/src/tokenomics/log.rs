//! Append-only event log, one JSON object per line.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub day: u32,
    pub op: String,
    pub args: Value,
    /// Leading 8 bytes (hex) of the SHA-256 of the balances after the operation.
    pub hash: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub records: Vec<LogRecord>,
}

impl EventLog {
    pub fn push(&mut self, day: u32, op: &str, args: Value, balances: &str) {
        let digest = Sha256::digest(balances.as_bytes());
        self.records.push(LogRecord {
            seq: self.records.len() as u64,
            day,
            op: op.to_string(),
            args,
            hash: hex::encode(&digest[..8]),
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("log records serialize") + "\n")
            .collect()
    }
}
