//! CSV tables, the JSON run manifest and its verification.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    /// Full double precision in scientific notation for floats.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<i64> for Cell {
    fn from(n: i64) -> Self {
        Cell::Int(n)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

pub type Row = Vec<Cell>;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    /// Column names with units in brackets.
    pub header: Vec<&'static str>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(file: &str, header: &[&'static str]) -> Self {
        Self {
            file: file.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::io(&self.file, e);
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.header.len());
            w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
        }
        w.into_inner().map_err(|e| CliError::io(&self.file, e.error()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungTiming {
    pub rung: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub spec: serde_json::Value,
    pub spec_sha256: String,
    pub parallel: bool,
    pub jobs: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub rung_timings: Vec<RungTiming>,
    pub verdicts: BTreeMap<String, serde_json::Value>,
    /// Data file name to sha256 of its bytes.
    pub files: BTreeMap<String, String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes every table and then the manifest listing their hashes.
pub fn write_outputs(dir: &Path, tables: &[Table], manifest: &mut Manifest) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for t in tables {
        let bytes = t.to_csv()?;
        let path = dir.join(&t.file);
        std::fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
        manifest.files.insert(t.file.clone(), sha256_hex(&bytes));
    }
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::io(&path, e))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

/// Checks every file listed in a manifest against its recorded hash.
pub fn verify_manifest(path: &Path) -> CliResult<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Manifest(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    if manifest.files.is_empty() {
        return Err(CliError::Manifest("no data files listed".into()));
    }
    for (file, hash) in &manifest.files {
        let bytes = std::fs::read(dir.join(file)).map_err(|e| CliError::io(dir.join(file), e))?;
        let actual = sha256_hex(&bytes);
        if &actual != hash {
            return Err(CliError::Manifest(format!("{file}: hash {actual} does not match {hash}")));
        }
    }
    Ok(manifest)
}
