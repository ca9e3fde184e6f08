//! Run directories, CSV artifacts and the summary record.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Diagnostic, ScenarioConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub deterministic: bool,
    pub threads: Option<usize>,
    pub config: ScenarioConfig,
    pub diagnostics: Vec<Diagnostic>,
    pub results: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub passed: bool,
    /// Omitted in deterministic mode so that reruns are byte-identical.
    pub wall_clock_seconds: Option<f64>,
}

/// Collects results, checks and artifacts for one experiment.
pub struct Outputs {
    dir: PathBuf,
    pub results: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            results: BTreeMap::new(),
            checks: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) -> anyhow::Result<()> {
        self.results
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// Writes a CSV whose header names the unit and measure of every column.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row.iter().map(Cell::to_string))?;
        }
        w.flush()?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
}

/// A CSV cell. Floats use the shortest round-trip representation.
pub enum Cell {
    F(f64),
    I(u64),
    B(bool),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(x) => write!(f, "{x:?}"),
            Cell::I(x) => write!(f, "{x}"),
            Cell::B(x) => write!(f, "{x}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::record::Cell::from($x)),*]
    };
}

pub fn write_summary(dir: &Path, record: &RunRecord) -> anyhow::Result<()> {
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(record)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
