//! JSON verification reports emitted by the CLI.
//!
//! A report is one suite's worth of named checks, each with its residual,
//! tolerance, pass flag, quadrature size and wall time. Records are sorted
//! by name so that merged concurrent results serialize deterministically;
//! with a fixed config and seed everything except the timing fields is
//! bit-reproducible.

use serde::Serialize;

pub const SCHEMA: &str = "ellax-report/1";

/// One named check inside a suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(rename = "N_used")]
    pub n_used: usize,
    pub seconds: f64,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        CheckRecord {
            name: name.into(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
            n_used: 0,
            seconds: 0.0,
        }
    }

    pub fn with_n_used(mut self, n_used: usize) -> Self {
        self.n_used = n_used;
        self
    }

    pub fn with_seconds(mut self, seconds: f64) -> Self {
        self.seconds = seconds;
        self
    }
}

/// A full suite report.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub schema: &'static str,
    pub version: &'static str,
    pub suite: String,
    pub pass: bool,
    pub records: Vec<CheckRecord>,
    pub config: serde_json::Value,
}

impl VerificationReport {
    /// Assemble a report: records are ordered by name and the overall flag
    /// is the conjunction of the per-record flags.
    pub fn new(
        suite: impl Into<String>,
        config: serde_json::Value,
        mut records: Vec<CheckRecord>,
    ) -> Self {
        records.sort_by(|a, b| a.name.cmp(&b.name));
        let pass = records.iter().all(|r| r.pass);
        VerificationReport {
            schema: SCHEMA,
            version: env!("CARGO_PKG_VERSION"),
            suite: suite.into(),
            pass,
            records,
            config,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
