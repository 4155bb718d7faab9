//! Tables, checks and the files a run leaves behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use wave3d_core::{Error, Result};

/// One CSV file: a header and rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Cells of column `name`.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Format(e.to_string()))
    }
}

/// Shortest round-trip representation; identical inputs give identical text.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

/// A pass/fail verdict against a configured tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), detail: detail.into(), pass }
    }
}

/// Everything a subcommand produces besides the manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub seeds: Vec<u64>,
    pub summary: serde_json::Map<String, Value>,
    /// Extra files written by the subcommand itself.
    #[serde(skip)]
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub fingerprint: String,
    pub master_seed: u64,
    pub replica_seeds: Vec<u64>,
    pub workers: usize,
    pub artifacts: Vec<PathBuf>,
    pub timings: Timings,
    pub config: Value,
}

/// `"<stem>_seed<seed>_beta<beta>.csv"`.
pub fn table_file(stem: &str, seed: u64, beta: f64) -> String {
    format!("{stem}_seed{seed}_beta{beta}.csv")
}

/// Writes the tables and `report.json`; returns the paths written.
pub fn write_outcome(
    out: &Path,
    subcommand: &str,
    fingerprint: &str,
    seed: u64,
    beta: f64,
    outcome: &Outcome,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut paths = Vec::new();
    for t in &outcome.tables {
        let path = out.join(table_file(&format!("{}_{}", subcommand.replace('-', "_"), t.name), seed, beta));
        fs::write(&path, t.to_csv()?)?;
        paths.push(path);
    }
    let report = serde_json::json!({
        "subcommand": subcommand,
        "fingerprint": fingerprint,
        "seed": seed,
        "beta": beta,
        "pass": outcome.all_pass(),
        "checks": outcome.checks,
        "summary": outcome.summary,
        "tables": paths.iter().map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned())).collect::<Vec<_>>(),
    });
    let report_path = out.join("report.json");
    fs::write(&report_path, serde_json::to_vec_pretty(&report)?)?;
    paths.push(report_path);
    Ok(paths)
}

pub fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    fs::create_dir_all(out)?;
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(manifest)?)?;
    Ok(path)
}

/// Machine-readable record of a failed run.
pub fn error_record(subcommand: &str, err: &Error) -> Value {
    let mut v = serde_json::json!({
        "status": "error",
        "subcommand": subcommand,
        "kind": err.kind(),
        "message": err.to_string(),
    });
    match err {
        Error::Config { key, .. } => v["key"] = Value::from(key.clone()),
        Error::NumericalBlowup { step } => v["step"] = Value::from(*step),
        _ => {}
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_names() {
        let mut t = Table::new("levels", &["n", "value"]);
        t.push(vec!["3".into(), num(0.1)]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "n,value\n3,0.1\n");
        assert_eq!(t.column("value").unwrap(), vec!["0.1"]);
        assert_eq!(table_file("wz", 7, 1.0), "wz_seed7_beta1.csv");
        let rec = error_record("simulate", &Error::NumericalBlowup { step: 12 });
        assert_eq!(rec["kind"], "numerical_blowup");
        assert_eq!(rec["step"], 12);
    }
}
