//! JSON reports and CSV series.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::construction::schedule::{RunMode, Schedule};
use crate::error::{Error, Result};

use super::{CheckResult, Outcome};

/// SHA-256 of `blob <len>\0<bytes>`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
    pub schedule: Schedule,
    pub mode: RunMode,
    /// Content hash of the serialized run inputs.
    pub input_hash: String,
}

impl Report {
    pub fn new(schedule: &Schedule, inputs: &impl Serialize) -> Result<Report> {
        let bytes = serde_json::to_vec(inputs).map_err(|e| Error::State(format!("serialize inputs: {e}")))?;
        Ok(Report { checks: Vec::new(), schedule: schedule.clone(), mode: schedule.mode, input_hash: content_hash(&bytes) })
    }

    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckResult>) {
        self.checks.extend(checks);
    }

    pub fn any_failed(&self) -> bool {
        self.checks.iter().any(|c| c.failed())
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.checks.iter().filter(|c| c.pass == outcome).count()
    }

    /// Pretty JSON; non-finite numbers become `null`.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::State(format!("serialize report: {e}")))
    }

    pub fn hash(&self) -> Result<String> {
        Ok(content_hash(self.to_json()?.as_bytes()))
    }

    /// Write `report.json` into `dir` and return its hash.
    pub fn write(&self, dir: &Path) -> Result<String> {
        let json = self.to_json()?;
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), &json)?;
        Ok(content_hash(json.as_bytes()))
    }
}

/// Columns of equal length as CSV with a header row.
pub fn csv_string(header: &[&str], columns: &[&[f64]]) -> Result<String> {
    if header.len() != columns.len() {
        return Err(Error::Config(format!("{} headers for {} columns", header.len(), columns.len())));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::Config("CSV columns differ in length".into()));
    }
    let mut out = header.join(",");
    out.push('\n');
    for r in 0..rows {
        for (i, c) in columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{:.17e}", c[r]).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, csv_string(header, columns)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::schedule::Regime;
    use crate::verify::{Measured, Mode};

    fn report() -> Report {
        let s = Schedule::new(2.0, 0.05, 2.0, 0.3, Regime::Additive, RunMode::Exploratory, 1.0).unwrap();
        let mut r = Report::new(&s, &("seed", 7)).unwrap();
        r.push(CheckResult::at_most("a", Measured::Scalar(0.5), 1.0, Mode::Assert, None));
        r.push(CheckResult::at_most("b", Measured::Series(vec![2.0, f64::NAN]), 1.0, Mode::Report, None));
        r
    }

    #[test]
    fn git_blob_hash_layout() {
        // sha256 of "blob 0\0".
        assert_eq!(content_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }

    #[test]
    fn report_round_trip_and_hash() {
        let r = report();
        let json = r.to_json().unwrap();
        assert!(json.contains("\"report-only\""));
        assert_eq!(r.hash().unwrap(), report().hash().unwrap());
        assert!(!r.any_failed());
        assert_eq!(r.count(Outcome::Pass), 1);
    }

    #[test]
    fn csv_layout() {
        let s = csv_string(&["t", "x"], &[&[0.0, 1.0], &[2.0, 3.0]]).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("t,x\n"));
        assert!(csv_string(&["t"], &[&[0.0], &[1.0]]).is_err());
    }
}
