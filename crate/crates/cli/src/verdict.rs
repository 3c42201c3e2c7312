//! Verdicts, checks and tabular artefacts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, TestId};
use crate::error::CliError;

/// Bumped whenever a field of [`Verdict`] or a CSV layout changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    AtMost,
    AtLeast,
    /// `measured` is 1 for true and 0 for false.
    IsTrue,
}

/// One threshold comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Which claim the check belongs to, e.g. `eigenstate`.
    pub group: String,
    pub name: String,
    pub measured: f64,
    pub op: Op,
    pub threshold: f64,
    pub pass: bool,
    /// What the threshold encodes.
    pub provenance: String,
}

impl Check {
    pub fn new(group: &str, name: &str, measured: f64, op: Op, threshold: f64, provenance: &str) -> Self {
        let pass = match op {
            Op::AtMost => measured <= threshold,
            Op::AtLeast => measured >= threshold,
            Op::IsTrue => measured == 1.0,
        };
        Self {
            group: group.into(),
            name: name.into(),
            measured,
            op,
            threshold,
            pass,
            provenance: provenance.into(),
        }
    }
}

/// `(n, dt, L)` of the primary run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridFingerprint {
    pub n: usize,
    pub dt: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub schema_version: u32,
    pub test: TestId,
    /// All gating checks pass.
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Reported but never gating.
    pub advisories: Vec<Check>,
    pub measured: BTreeMap<String, f64>,
    pub runtime_seconds: f64,
    pub grid: GridFingerprint,
    pub effective_config: RunConfig,
    pub timestamp: String,
}

impl Verdict {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Checks of one group.
    pub fn group(&self, group: &str) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.group == group).collect()
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.12e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// A CSV artefact; headers read `name[unit]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Self { name: name.into(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", self.name)))?;
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Checks, advisories, loose measurements and tables gathered by a suite.
#[derive(Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    pub advisories: Vec<Check>,
    pub measured: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn at_most(&mut self, group: &str, name: &str, measured: f64, threshold: f64, provenance: &str) {
        self.checks.push(Check::new(group, name, measured, Op::AtMost, threshold, provenance));
    }

    pub fn at_least(&mut self, group: &str, name: &str, measured: f64, threshold: f64, provenance: &str) {
        self.checks.push(Check::new(group, name, measured, Op::AtLeast, threshold, provenance));
    }

    /// `lo ≤ measured ≤ hi` as two checks.
    pub fn within(&mut self, group: &str, name: &str, measured: f64, lo: f64, hi: f64, provenance: &str) {
        self.at_least(group, &format!("{name}_lower"), measured, lo, provenance);
        self.at_most(group, &format!("{name}_upper"), measured, hi, provenance);
    }

    pub fn is_true(&mut self, group: &str, name: &str, value: bool, provenance: &str) {
        self.checks.push(Check::new(group, name, if value { 1.0 } else { 0.0 }, Op::IsTrue, 1.0, provenance));
    }

    pub fn advise(&mut self, check: Check) {
        self.advisories.push(check);
    }

    pub fn note(&mut self, name: &str, value: f64) {
        self.measured.insert(name.into(), value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_is_a_function_of_measured_and_threshold() {
        assert!(Check::new("g", "a", 1.0, Op::AtMost, 1.0, "").pass);
        assert!(!Check::new("g", "a", f64::NAN, Op::AtMost, 1.0, "").pass);
        assert!(!Check::new("g", "a", f64::NAN, Op::AtLeast, 1.0, "").pass);
        assert!(Check::new("g", "a", 1.0, Op::IsTrue, 1.0, "").pass);
        assert!(!Check::new("g", "a", 0.0, Op::IsTrue, 1.0, "").pass);
    }

    #[test]
    fn cells_render_fixed_precision() {
        assert_eq!(Cell::Num(0.1).render(), "1.000000000000e-1");
        assert_eq!(Cell::Int(-3).render(), "-3");
    }
}
