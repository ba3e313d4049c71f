//! Reports, pass/fail checks and their CSV/JSON rendering.
//!
//! CSV numbers are written with 17 significant digits (`{:.16e}`), so a
//! parse of the file gives back the exact `f64`. Missing values are `NaN`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A homogeneous numeric table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    #[serde(serialize_with = "rows_with_nulls")]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn rows_with_nulls<S: serde::Serializer>(
    rows: &[Vec<f64>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let as_opt: Vec<Vec<Option<f64>>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.is_finite().then_some(*x)).collect())
        .collect();
    as_opt.serialize(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `|observed - expected| <= tolerance`
    Absolute,
    /// `|observed - expected| <= tolerance * |expected|`
    Relative,
    /// `observed <= expected`
    AtMost,
    /// `observed >= expected`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub criterion: Criterion,
    pub passed: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        observed: f64,
        expected: f64,
        tolerance: f64,
        criterion: Criterion,
    ) -> Self {
        let passed = match criterion {
            Criterion::Absolute => (observed - expected).abs() <= tolerance,
            Criterion::Relative => (observed - expected).abs() <= tolerance * expected.abs(),
            Criterion::AtMost => observed <= expected,
            Criterion::AtLeast => observed >= expected,
        };
        Self {
            name: name.into(),
            observed,
            expected,
            tolerance,
            criterion,
            passed,
        }
    }

    pub fn absolute(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self::new(name, observed, expected, tolerance, Criterion::Absolute)
    }

    pub fn relative(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self::new(name, observed, expected, tolerance, Criterion::Relative)
    }

    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self::new(name, observed, bound, 0.0, Criterion::AtMost)
    }

    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self::new(name, observed, bound, 0.0, Criterion::AtLeast)
    }

    pub fn describe(&self) -> String {
        let rule = match self.criterion {
            Criterion::Absolute => format!("{:.6e} +/- {:.1e}", self.expected, self.tolerance),
            Criterion::Relative => format!("{:.6e} +/- {}%", self.expected, self.tolerance * 100.0),
            Criterion::AtMost => format!("<= {:.6e}", self.expected),
            Criterion::AtLeast => format!(">= {:.6e}", self.expected),
        };
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!(
            "{verdict} {}: {:.10e} (want {rule})",
            self.name, self.observed
        )
    }
}

/// Everything a command produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub parameters: Value,
    #[serde(serialize_with = "summary_with_nulls")]
    pub summary: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub table: Table,
    /// Structured extras (pointer states, ...); JSON output only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

fn summary_with_nulls<S: serde::Serializer>(
    m: &BTreeMap<String, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let as_opt: BTreeMap<&String, Option<f64>> = m
        .iter()
        .map(|(k, v)| (k, v.is_finite().then_some(*v)))
        .collect();
    as_opt.serialize(s)
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64, parameters: Value, table: Table) -> Self {
        Self {
            command: command.into(),
            seed,
            parameters,
            summary: BTreeMap::new(),
            checks: Vec::new(),
            table,
            detail: None,
        }
    }

    pub fn note(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Human-readable summary: key values, then one line per check.
    pub fn summary_text(&self) -> String {
        let mut out = format!("{}\n", self.command);
        for (k, v) in &self.summary {
            out.push_str(&format!("  {k} = {}\n", format_number(*v)));
        }
        for c in &self.checks {
            out.push_str(&format!("  {}\n", c.describe()));
        }
        out
    }

    pub fn write<W: Write>(&self, format: Format, w: W) -> Result<()> {
        match format {
            Format::Csv => write_csv(&self.table, w),
            Format::Json => write_json(self, w),
        }
    }
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Header row, then one row per record. An empty table gives a header-only file.
pub fn write_csv<W: Write>(table: &Table, w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let err = |e: csv::Error| CliError::Output(e.to_string());
    wtr.write_record(&table.columns).map_err(err)?;
    for row in &table.rows {
        if row.len() != table.columns.len() {
            return Err(CliError::Output(format!(
                "row has {} fields, header has {}",
                row.len(),
                table.columns.len()
            )));
        }
        wtr.write_record(row.iter().map(|x| format_number(*x)))
            .map_err(err)?;
    }
    wtr.flush().map_err(|e| CliError::Output(e.to_string()))
}

pub fn write_json<W: Write, S: Serialize>(value: &S, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Output(e.to_string()))?;
    w.write_all(b"\n")
        .map_err(|e| CliError::Output(e.to_string()))
}
