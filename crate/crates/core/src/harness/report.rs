use serde::{Deserialize, Serialize};

/// One measured property: passes when `violation <= tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub desc: String,
    pub violation: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(desc: impl Into<String>, violation: f64, tol: f64) -> Self {
        Self {
            desc: desc.into(),
            violation,
            tol,
            pass: violation <= tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>) -> Self {
        Self {
            suite: suite.into(),
            checks: Vec::new(),
            overall: true,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.overall &= check.pass;
        self.checks.push(check);
    }

    pub fn check(&mut self, desc: impl Into<String>, violation: f64, tol: f64) {
        self.push(Check::new(desc, violation, tol));
    }

    /// Appends another report's checks, prefixing their descriptions.
    pub fn merge(&mut self, prefix: &str, other: VerificationReport) {
        for mut c in other.checks {
            c.desc = format!("{prefix}: {}", c.desc);
            self.push(c);
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Largest violation, treating NaN as an infinite violation.
pub(crate) fn worst(acc: f64, v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        acc.max(v)
    }
}
