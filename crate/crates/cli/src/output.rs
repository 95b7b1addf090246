//! Deterministic CSV/JSON rendering, run manifests, and where files go.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::Invalid;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QRG_OUT_DIR";

/// 17 significant digits, exponent form, locale-free.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => float(x),
        }
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render())).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    pub fn csv(name: &str, table: &Table) -> Self {
        Self {
            name: name.to_owned(),
            contents: table.to_csv(),
        }
    }

    pub fn json<T: Serialize>(name: &str, value: &T) -> Self {
        let mut contents = serde_json::to_vec_pretty(value).expect("serializable summary");
        contents.push(b'\n');
        Self {
            name: name.to_owned(),
            contents,
        }
    }

    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.contents).unwrap_or("")
    }
}

/// Everything a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    /// Resolved settings, as config-file keys.
    pub config: BTreeMap<String, String>,
    /// Data files; the first is the primary dataset.
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
    /// Command-specific facts recorded in the manifest.
    pub summary: serde_json::Value,
    /// Text always shown on stdout.
    pub console: String,
    /// Set when the command ran to completion but its checks failed.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, config: BTreeMap<String, String>) -> Self {
        Self {
            command,
            config,
            artifacts: Vec::new(),
            warnings: Vec::new(),
            summary: serde_json::Value::Null,
            console: String::new(),
            failure: None,
        }
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Serialize)]
struct Derived {
    critical_field: f64,
    block_sites: u32,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a BTreeMap<String, String>,
    files: Vec<&'a str>,
    derived: Derived,
    warnings: &'a [String],
    summary: &'a serde_json::Value,
    started_unix_seconds: u64,
    duration_seconds: f64,
}

impl<'a> Manifest<'a> {
    pub fn new(report: &'a Report, started: std::time::SystemTime, duration: std::time::Duration) -> Self {
        Self {
            tool: "qrg",
            version: env!("CARGO_PKG_VERSION"),
            command: report.command,
            config: &report.config,
            files: report.artifacts.iter().map(|a| a.name.as_str()).collect(),
            derived: Derived {
                critical_field: qrg_core::coupling::CRITICAL_FIELD,
                block_sites: 2,
            },
            warnings: &report.warnings,
            summary: &report.summary,
            started_unix_seconds: started
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            duration_seconds: duration.as_secs_f64(),
        }
    }
}

/// `--out` first, then the environment variable; `None` means stdout.
pub fn output_dir(flag: Option<&Path>, env: Option<PathBuf>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or(env.filter(|p| !p.as_os_str().is_empty()))
}

/// Writes every artifact plus `<command>.manifest.json` into `dir`.
pub fn write_dir(dir: &Path, report: &Report, manifest: &Manifest<'_>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Invalid(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for a in &report.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents).map_err(|e| Invalid(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }
    let path = dir.join(format!("{}.manifest.json", report.command));
    let mut text = serde_json::to_vec_pretty(manifest).context("manifest")?;
    text.push(b'\n');
    std::fs::write(&path, text).map_err(|e| Invalid(format!("cannot write {}: {e}", path.display())))?;
    written.push(path);
    Ok(written)
}

/// Primary dataset to `out`, the rest to `err`.
pub fn write_streams(report: &Report, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut artifacts = report.artifacts.iter();
    if let Some(primary) = artifacts.next() {
        out.write_all(&primary.contents)?;
    }
    for a in artifacts {
        writeln!(err, "--- {}", a.name)?;
        err.write_all(&a.contents)?;
    }
    Ok(())
}
