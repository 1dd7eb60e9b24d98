//! Number formatting, file writing and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`: shortest of fixed or scientific notation at 12 significant
/// digits, trailing zeros removed.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// CSV with a header row and LF line endings. `None` cells stay empty.
pub fn csv(header: &[&str], rows: &[Vec<Option<f64>>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(fmt_g).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// Collects written files and their digests for the run manifest.
#[derive(Debug, Default)]
pub struct Outputs {
    digests: BTreeMap<String, String>,
}

impl Outputs {
    pub fn write(&mut self, path: &Path, contents: &str) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        }
        fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        self.digests.insert(path.display().to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `report.csv` → `report.csv.<suffix>`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub command: &'a str,
    pub parameters: &'a P,
    pub seed: u64,
    pub version: &'static str,
    pub duration_seconds: f64,
    pub outputs: BTreeMap<String, String>,
}

/// Writes `<primary>.manifest.json` describing every file in `outputs`.
pub fn write_manifest<P: Serialize>(
    primary: &Path,
    command: &str,
    parameters: &P,
    seed: u64,
    elapsed: Duration,
    outputs: Outputs,
) -> CliResult<()> {
    let manifest = RunManifest {
        command,
        parameters,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        duration_seconds: elapsed.as_secs_f64(),
        outputs: outputs.digests,
    };
    let path = sidecar(primary, "manifest.json");
    fs::write(&path, to_json(&manifest)).map_err(|source| CliError::Io { path, source })
}
