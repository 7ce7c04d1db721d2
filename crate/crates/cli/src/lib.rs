//! Batch runner for asymlab experiments.
//!
//! A run reads a TOML spec, executes the pipeline of its kind over the
//! truncation ladder, and writes CSV tables plus a `manifest.json` with the
//! spec echo, tolerances, per-rung wall times, verdicts and a sha256 for every
//! data file.

pub mod error;
pub mod experiments;
pub mod output;
pub mod spec;

use std::io::Write;
use std::path::{Path, PathBuf};

use asymlab::tol::Tolerances;

use crate::error::{CliError, CliResult};
use crate::output::{sha256_hex, verify_manifest, write_outputs, Manifest, MANIFEST_FILE};
use crate::spec::{resolve, ExperimentSpec, BUILTINS};

/// Parses `name=value` tolerance overrides onto the defaults.
pub fn tolerances(overrides: &[String]) -> CliResult<Tolerances> {
    let mut tol = Tolerances::default();
    for item in overrides {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::schema("--tol", format!("`{item}` is not name=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::schema(format!("--tol {name}"), format!("`{value}` is not a number")))?;
        tol.set(name.trim(), value)
            .map_err(|m| CliError::schema(format!("--tol {name}"), m))?;
    }
    Ok(tol)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub tolerances: Tolerances,
}

/// Runs a spec (a path or `builtin:<name>`) and returns the output directory.
pub fn run(spec_arg: &str, options: &RunOptions) -> CliResult<(PathBuf, Manifest)> {
    let (spec, source) = resolve(spec_arg)?;
    let dir = options
        .out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .ok_or_else(|| CliError::schema("output_dir", "missing and no --out given"))?;
    let outcome = experiments::run_experiment(&spec, &options.tolerances)?;
    let mut manifest = Manifest {
        tool: "asymlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        spec: serde_json::to_value(&spec).map_err(|e| CliError::io(spec_arg, e))?,
        spec_sha256: sha256_hex(source.as_bytes()),
        parallel: asymlab::par::is_parallel(),
        jobs: options.jobs,
        tolerances: options
            .tolerances
            .iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        rung_timings: outcome.timings,
        verdicts: outcome.verdicts,
        files: Default::default(),
    };
    write_outputs(&dir, &outcome.tables, &mut manifest)?;
    Ok((dir, manifest))
}

/// One line per built-in: name, kind and what it exercises.
pub fn list(out: &mut impl Write) -> std::io::Result<()> {
    for b in BUILTINS {
        let spec = ExperimentSpec::parse(b.source).expect("built-in specs are valid");
        writeln!(
            out,
            "{:<22} {:<22} {}",
            b.name,
            spec.kind.as_str(),
            spec.description.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Validated {
    Spec(String),
    Manifest { files: usize },
}

/// Validates a spec file, or verifies the hashes of a `manifest.json`.
pub fn validate(arg: &str) -> CliResult<Validated> {
    let path = Path::new(arg);
    if path.file_name().is_some_and(|n| n == MANIFEST_FILE) || path.extension().is_some_and(|e| e == "json") {
        let m = verify_manifest(path)?;
        return Ok(Validated::Manifest { files: m.files.len() });
    }
    let (spec, _) = resolve(arg)?;
    Ok(Validated::Spec(spec.name))
}
