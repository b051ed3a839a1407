//! Run artifacts: `results.csv`, `summary.json` and `manifest.json`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Resolved;
use crate::RunError;

/// A CSV cell. Floats are written with 17 significant digits so that equal
/// runs give equal bytes.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(io_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io_error)?;
        }
        w.into_inner().map_err(|e| RunError::Io(e.to_string()))
    }
}

fn io_error(e: csv::Error) -> RunError {
    RunError::Io(e.to_string())
}

pub fn format_bound(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// One pass/fail comparison of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub target: String,
    pub detail: String,
}

impl Check {
    pub fn within(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            passed: (value - target).abs() < tolerance,
            value,
            target: format!("{target} +- {}", format_bound(tolerance)),
            detail: format!("|{value:.6} - {target:.6}| = {:.3e}", (value - target).abs()),
        }
    }

    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            passed: value < bound,
            value,
            target: format!("< {}", format_bound(bound)),
            detail: format!("{value:.3e}"),
        }
    }

    pub fn holds(name: &str, passed: bool, value: f64, target: &str, detail: String) -> Self {
        Check { name: name.into(), passed, value, target: target.into(), detail }
    }
}

/// Everything a scenario produces.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub table: Table,
    pub values: Map<String, Value>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn value(&mut self, key: &str, v: impl Serialize) {
        self.values.insert(key.into(), serde_json::to_value(v).expect("serializable value"));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self, scenario: &str) -> Value {
        serde_json::json!({
            "scenario": scenario,
            "passed": self.passed(),
            "checks": self.checks,
            "values": self.values,
        })
    }
}

/// RNG and float-format notes recorded in every manifest.
pub const RNG_DESCRIPTION: &str = "ChaCha8, one stream per (seed, stream index); Monte Carlo shards merged in shard order";

pub fn manifest(resolved: &Resolved) -> Value {
    serde_json::json!({
        "artifact": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "rng": RNG_DESCRIPTION,
        "float_format": "17 significant digits, scientific notation",
        "files": ["results.csv", "summary.json", "manifest.json"],
        "config": resolved,
    })
}

/// Writes `bytes` to `dir/name` through a temporary file in `dir` and a
/// rename, so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, RunError> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes).map_err(|e| RunError::Io(e.to_string()))?;
    tmp.flush().map_err(|e| RunError::Io(e.to_string()))?;
    tmp.persist(&target).map_err(|e| RunError::Io(format!("{}: {e}", target.display())))?;
    Ok(target)
}

pub fn write_artifacts(resolved: &Resolved, report: &Report) -> Result<(), RunError> {
    let dir = &resolved.out;
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let json = |v: &Value| {
        let mut s = serde_json::to_string_pretty(v).expect("json value");
        s.push('\n');
        s.into_bytes()
    };
    write_atomic(dir, "results.csv", &report.table.to_csv()?)?;
    write_atomic(dir, "summary.json", &json(&report.summary(resolved.scenario.name())))?;
    write_atomic(dir, "manifest.json", &json(&manifest(resolved)))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let s = format_float(1.0 / 3.0);
        assert_eq!(s, "3.3333333333333331e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new(&["n", "ratio", "method"]);
        t.push(vec![2usize.into(), 0.5.into(), "exact".into()]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "n,ratio,method\n2,5.0000000000000000e-1,exact\n");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.txt", b"one").unwrap();
        write_atomic(dir.path(), "a.txt", b"two").unwrap();
        assert_eq!(std::fs::read(dir.path().join("a.txt")).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
