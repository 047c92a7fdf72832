use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// A named number recorded by a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
}

/// Outcome of one verification step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The mathematical statement the check exercises.
    pub anchor: String,
    pub measured: Vec<Measurement>,
    pub tolerance: f64,
    pub passed: bool,
    pub mandatory: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckRecord {
    pub fn new(name: &str, anchor: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            measured: Vec::new(),
            tolerance,
            passed: true,
            mandatory: true,
            notes: Vec::new(),
        }
    }

    pub fn measure(&mut self, label: impl Into<String>, value: f64) -> &mut Self {
        self.measured.push(Measurement { label: label.into(), value });
        self
    }

    pub fn require(&mut self, ok: bool) -> &mut Self {
        self.passed &= ok;
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn advisory(mut self) -> Self {
        self.mandatory = false;
        self
    }

    /// Largest recorded value whose label starts with `prefix`.
    pub fn max_of(&self, prefix: &str) -> Option<f64> {
        self.measured
            .iter()
            .filter(|m| m.label.starts_with(prefix))
            .map(|m| m.value)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// Ordered list of checks with the overall verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub alpha: f64,
    pub m: Option<u32>,
    pub interval: [f64; 2],
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn new(alpha: f64, m: Option<u32>, interval: [f64; 2]) -> Self {
        Self { alpha, m, interval, checks: Vec::new(), passed: true }
    }

    pub fn push(&mut self, record: CheckRecord) {
        if record.mandatory && !record.passed {
            self.passed = false;
        }
        self.checks.push(record);
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.mandatory && !c.passed)
    }
}
