//! Scenario results: pass/fail checks, metrics and CSV tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fracback_core::fmt_sig17;
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
}

impl Limit {
    fn admits(self, x: f64) -> bool {
        match self {
            Limit::AtMost(hi) => x <= hi,
            Limit::AtLeast(lo) => x >= lo,
            Limit::Within(lo, hi) => x >= lo && x <= hi,
        }
    }

    fn bounds(self) -> (Option<f64>, Option<f64>) {
        match self {
            Limit::AtMost(hi) => (None, Some(hi)),
            Limit::AtLeast(lo) => (Some(lo), None),
            Limit::Within(lo, hi) => (Some(lo), Some(hi)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub limit: Limit,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, limit: Limit) -> Self {
        Self {
            name: name.into(),
            measured,
            passed: limit.admits(measured),
            limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x.into())
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(x) => write!(f, "{x}"),
            Cell::Real(x) => f.write_str(&fmt_sig17(*x)),
            Cell::Text(x) => f.write_str(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Empty for the scenario's main table, otherwise a file-name suffix.
    pub suffix: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(suffix: &'static str, header: &[&'static str]) -> Self {
        Self {
            suffix,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: Scenario,
    pub checks: Vec<Check>,
    pub metrics: Map<String, Value>,
    pub tables: Vec<Table>,
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

impl Report {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            checks: Vec::new(),
            metrics: Map::new(),
            tables: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, measured: f64, limit: Limit) {
        self.checks.push(Check::new(name, measured, limit));
    }

    pub fn metric(&mut self, key: &str, x: f64) {
        self.metrics.insert(key.into(), number(x));
    }

    pub fn series(&mut self, key: &str, xs: impl IntoIterator<Item = f64>) {
        self.metrics.insert(
            key.into(),
            Value::Array(xs.into_iter().map(number).collect()),
        );
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self, config: &ExperimentConfig) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                let (lo, hi) = c.limit.bounds();
                json!({
                    "name": c.name,
                    "passed": c.passed,
                    "measured": number(c.measured),
                    "lower": lo.map(number),
                    "upper": hi.map(number),
                })
            })
            .collect();
        let mut v = Map::new();
        v.insert("scenario".into(), json!(self.scenario.name()));
        v.insert("passed".into(), json!(self.passed()));
        v.insert("rho".into(), number(config.rho.get()));
        v.insert("T".into(), number(config.t_end));
        v.insert("modes".into(), json!(config.modes));
        v.insert("spectrum".into(), json!(config.spectrum));
        v.insert("epsilon".into(), number(config.epsilon));
        v.insert("seed".into(), json!(config.seed));
        v.insert("tol".into(), config.tol.map(number).unwrap_or(Value::Null));
        let (a, b) = config.sweep_range();
        v.insert("k_range".into(), json!([a, b]));
        v.insert("checks".into(), Value::Array(checks));
        for (k, x) in &self.metrics {
            v.insert(k.clone(), x.clone());
        }
        Value::Object(v)
    }

    /// Write `<name>.json` and one CSV per table into `dir`; returns the paths written.
    pub fn write(&self, config: &ExperimentConfig, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let name = if t.suffix.is_empty() {
                format!("{}.csv", self.scenario.name())
            } else {
                format!("{}_{}.csv", self.scenario.name(), t.suffix)
            };
            let path = dir.join(name);
            let mut buf = Vec::new();
            t.write(&mut buf)?;
            fs::write(&path, buf)?;
            written.push(path);
        }
        let path = dir.join(format!("{}.json", self.scenario.name()));
        let mut text = serde_json::to_string_pretty(&self.to_json(config))?;
        text.push('\n');
        fs::write(&path, text)?;
        written.push(path);
        Ok(written)
    }
}
