use std::collections::BTreeMap;

use holo_lab::rigidity::Verdict;
use serde::Serialize;
use serde_json::Value;

use crate::config::{Command, RunConfig};

/// Which side of the tolerance a residual must fall on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `residual <= tolerance`.
    AtMost,
    /// `residual > tolerance`, for controls that must *not* look like the signal.
    Above,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    /// Where the worst residual occurred, when that is meaningful.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
}

impl CheckOutcome {
    pub fn at_most(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), residual, tolerance, bound: Bound::AtMost, pass: residual <= tolerance, at: None }
    }

    pub fn above(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), residual, tolerance, bound: Bound::Above, pass: residual > tolerance, at: None }
    }

    pub fn located(mut self, z: [f64; 2]) -> Self {
        self.at = Some(format_point(z));
        self
    }
}

pub fn format_point(z: [f64; 2]) -> String {
    format!("z = {}{:+}i", z[0], z[1])
}

/// A verdict compared with the one the config expects. Counterexamples pass
/// when they are rejected.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictOutcome {
    pub subject: String,
    pub verdict: Verdict,
    pub expected: Verdict,
    pub pass: bool,
    pub holo_residual: f64,
    pub holo_worst_at: String,
    pub constancy_deviation: f64,
    pub strip_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Command,
    pub config: RunConfig,
    pub checks: Vec<CheckOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<VerdictOutcome>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// CSV file names, relative to the output directory.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
    pub pass: bool,
}

impl RunReport {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            tool: "holo-lab",
            version: env!("CARGO_PKG_VERSION"),
            command: config.command,
            config: config.clone(),
            checks: Vec::new(),
            verdicts: Vec::new(),
            details: BTreeMap::new(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
            pass: false,
        }
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(key.to_string(), serde_json::to_value(value).expect("report values serialize"));
    }

    pub fn finish(mut self) -> Self {
        self.pass = self.checks.iter().all(|c| c.pass) && self.verdicts.iter().all(|v| v.pass);
        self
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| {
                let rel = match c.bound {
                    Bound::AtMost => ">",
                    Bound::Above => "<=",
                };
                let at = c.at.as_deref().map(|a| format!(" at {a}")).unwrap_or_default();
                format!("check {} failed: residual {:e} {rel} tolerance {:e}{at}", c.name, c.residual, c.tolerance)
            })
            .collect();
        out.extend(self.verdicts.iter().filter(|v| !v.pass).map(|v| {
            format!(
                "{}: verdict {} but expected {} (holomorphy residual {:e} at {})",
                v.subject, v.verdict, v.expected, v.holo_residual, v.holo_worst_at
            )
        }));
        out
    }

    /// Pretty JSON with a trailing newline. Identical inputs give identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
