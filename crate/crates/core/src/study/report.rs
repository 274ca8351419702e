//! Results of a study: statistics, pass/fail checks and exported data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::Scenario;

/// One statistical decision and the tolerance it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Human-readable rule, e.g. `|mean - 1| <= 4 SE`.
    pub rule: String,
    /// The quantity compared against the tolerance.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, rule: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            rule: rule.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    /// Passes when `value < tolerance`.
    pub fn below(name: impl Into<String>, rule: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            passed: value < tolerance,
            ..Self::at_most(name, rule, value, tolerance)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
    pub code_version: String,
}

/// Per-path failures, such as exhausted event budgets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureSummary {
    pub count: u64,
    /// Messages of the first few failures with their path index.
    pub examples: Vec<(u64, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub scenario: Scenario,
    pub n_paths: u64,
    pub statistics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub failures: FailureSummary,
    pub provenance: Provenance,
}

impl StudyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Everything a study produces.
#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub report: StudyReport,
    pub tables: Vec<Table>,
    /// Extra JSON documents, by file stem.
    pub documents: Vec<(String, serde_json::Value)>,
}
