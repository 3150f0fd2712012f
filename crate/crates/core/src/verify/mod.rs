//! Measurable checks on constructed levels and their JSON/CSV reports.

pub mod convergence;
pub mod energy;
pub mod inductive;
pub mod report;
pub mod residual;
pub mod scaling;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Assert,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    ReportOnly,
}

/// Where an assert-mode check was worst.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub t: f64,
    pub x: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Measured {
    Scalar(f64),
    Series(Vec<f64>),
}

impl Measured {
    pub fn max(&self) -> f64 {
        match self {
            Measured::Scalar(v) => *v,
            Measured::Series(s) => s.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: Measured,
    pub target: f64,
    pub mode: Mode,
    pub pass: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

impl CheckResult {
    /// `measured <= target` (series: every entry). Report mode never fails.
    pub fn at_most(name: &str, measured: Measured, target: f64, mode: Mode, location: Option<Location>) -> CheckResult {
        let holds = measured.max() <= target;
        CheckResult::from_holds(name, measured, target, mode, holds, location)
    }

    pub fn from_holds(
        name: &str,
        measured: Measured,
        target: f64,
        mode: Mode,
        holds: bool,
        location: Option<Location>,
    ) -> CheckResult {
        let pass = match (mode, holds) {
            (Mode::Report, _) => Outcome::ReportOnly,
            (Mode::Assert, true) => Outcome::Pass,
            (Mode::Assert, false) => Outcome::Fail,
        };
        let location = if pass == Outcome::Fail { location } else { None };
        CheckResult { name: name.into(), measured, target, mode, pass, location, note: String::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> CheckResult {
        self.note = note.into();
        self
    }

    pub fn failed(&self) -> bool {
        self.pass == Outcome::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_mode_never_fails() {
        let c = CheckResult::at_most("x", Measured::Scalar(2.0), 1.0, Mode::Report, None);
        assert_eq!(c.pass, Outcome::ReportOnly);
        let c = CheckResult::at_most("x", Measured::Series(vec![0.5, 2.0]), 1.0, Mode::Assert, None);
        assert!(c.failed());
    }

    #[test]
    fn location_only_on_failure() {
        let loc = Some(Location { t: 0.0, x: [0.0; 3] });
        assert!(CheckResult::at_most("x", Measured::Scalar(0.5), 1.0, Mode::Assert, loc).location.is_none());
        assert!(CheckResult::at_most("x", Measured::Scalar(1.5), 1.0, Mode::Assert, loc).location.is_some());
    }
}
