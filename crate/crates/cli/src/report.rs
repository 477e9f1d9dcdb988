//! Report envelope and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::spec::{Action, ExperimentSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    /// False when a hypothesis check rejected the input (exit code 2).
    pub passed: bool,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<R> {
    pub schema: String,
    pub action: Action,
    pub spec: ExperimentSpec,
    pub status: Status,
    pub result: R,
}

/// One CSV line: `t,norm_kind,value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub t: f64,
    pub norm_kind: String,
    pub value: f64,
}

/// Write `bytes` to `path` through a temporary sibling and a rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

pub fn write_json<R: Serialize>(dir: &Path, stem: &str, report: &R) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

pub fn csv_bytes(rows: &[NormRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

pub fn write_csv(dir: &Path, stem: &str, rows: &[NormRow]) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.csv"));
    write_atomic(&path, &csv_bytes(rows)?)?;
    Ok(path)
}

pub fn read_csv(path: &Path) -> Result<Vec<NormRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec.with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(rows)
}
