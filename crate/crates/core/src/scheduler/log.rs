//! Line-delimited decision log shared by every scheduler.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::simenv::Allocation;

/// One scheduling decision: what happened, which algorithm acted, and
/// the full partitions before and after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub t_ms: u64,
    pub scheduler: String,
    pub event: String,
    pub algorithm: String,
    pub service: String,
    pub action: String,
    pub allocation_before: Allocation,
    pub allocation_after: Allocation,
    pub reward: Option<f64>,
    pub rollback: bool,
}

#[derive(Debug, Clone, Default)]
pub struct DecisionLog {
    pub records: Vec<DecisionRecord>,
}

impl DecisionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: DecisionRecord) -> usize {
        self.records.push(record);
        self.records.len() - 1
    }

    pub fn set_reward(&mut self, index: usize, reward: f64) {
        if let Some(r) = self.records.get_mut(index) {
            r.reward = Some(reward);
        }
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_jsonl()?.as_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut records = Vec::new();
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            records.push(serde_json::from_str(line)?);
        }
        Ok(Self { records })
    }

    /// Count of records per action name, for the action-mix reports.
    pub fn action_counts(&self) -> std::collections::BTreeMap<String, usize> {
        let mut counts = std::collections::BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.action.clone()).or_insert(0) += 1;
        }
        counts
    }
}
