//! CSV series and JSON manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::HarnessResult;

pub const SERIES_FILE: &str = "series.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// A cell of a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match c {
                    Cell::Num(v) => out.push_str(&format_number(*v)),
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                    Cell::Text(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> HarnessResult<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, threshold: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            value,
            threshold: threshold.into(),
            passed,
        }
    }

    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check::new(name, value, format!("<= {limit:e}"), value <= limit)
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check::new(name, value, format!(">= {limit:e}"), value >= limit)
    }

    pub fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Check::new(
            name,
            value,
            format!("{target} +/- {tol}"),
            (value - target).abs() <= tol,
        )
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            format_number(self.value),
            self.threshold
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuRecord {
    pub re: f64,
    pub im: f64,
    /// Residuals for `+1, -1, +i, -i`.
    pub residuals: Vec<f64>,
    pub best_residual: f64,
    pub runner_up: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    pub m: u32,
    pub big_m: u32,
    pub k: u32,
    pub s: f64,
    pub lambda: Option<f64>,
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub status: String,
    pub config: RunConfig,
    pub code_version: String,
    pub mu_star: MuRecord,
    pub derived: Option<Derived>,
    pub wall_clock_seconds: f64,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub error: Option<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn begin(config: &RunConfig, mu_star: MuRecord) -> Self {
        RunManifest {
            status: "running".into(),
            config: config.clone(),
            code_version: code_version(),
            mu_star,
            derived: None,
            wall_clock_seconds: 0.0,
            checks: Vec::new(),
            notes: Vec::new(),
            error: None,
            outputs: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn write(&self, dir: &Path) -> HarnessResult<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

pub fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-2.0), "-2.0000000000000000e0");
        let v = 1.0 / 3.0;
        assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new(&["t", "label"]);
        t.push(vec![0.5.into(), "a".into()]);
        assert_eq!(t.to_csv(), "t,label\n5.0000000000000000e-1,a\n");
    }
}
