//! Writers, number formatting and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// `x` rounded to 12 significant digits, written in plain decimal.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("round trip");
    format!("{rounded}")
}

pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// `-` is standard output.
pub fn write_to(out: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if out == Path::new("-") {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(bytes)?;
        stdout.flush()?;
    } else {
        fs::write(out, bytes).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckStatus {
    pub name: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub version: String,
    pub threads: usize,
    pub output: String,
    pub wall_time_seconds: f64,
    pub checks: Vec<CheckStatus>,
}

/// `out.manifest.json` next to a file; standard error for `-` unless an
/// explicit path is given.
pub fn manifest_path(out: &Path, explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    if out == Path::new("-") {
        return None;
    }
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    Some(PathBuf::from(s))
}

pub fn write_manifest(m: &RunManifest, path: Option<&Path>) -> Result<(), CliError> {
    let bytes = json_bytes(m)?;
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            std::io::stderr().write_all(&bytes)?;
            Ok(())
        }
    }
}
