//! Run manifests, number formatting and file output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use wiretap_core::feedback_sim::SimReport;

/// Significant digits kept in emitted floats.
pub const SIG_DIGITS: usize = 12;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Enough to re-run a command: its name, parameters and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, params: BTreeMap<String, Value>, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            params,
            seed,
            tool_version: TOOL_VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// A result together with the manifest that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope {
    pub manifest: RunManifest,
    pub result: Value,
}

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every float in a JSON tree to [`SIG_DIGITS`] significant digits.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp: PathBuf = dir.join(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub const SIM_CSV_HEADER: &str = "scheme,n,M,trials,seed,p_e_hat,ci_lo,ci_hi,chi2,pvalue,mi_bits,mi_corrected";

fn num(x: f64) -> String {
    round_sig(x).to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sim_csv(r: &SimReport) -> String {
    format!(
        "{SIM_CSV_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
        r.scheme.name(),
        r.n,
        r.m_size,
        r.trials,
        r.seed,
        num(r.p_e_hat),
        num(r.ci_lo),
        num(r.ci_hi),
        opt(r.chi2_stat),
        opt(r.chi2_pvalue),
        num(r.mi_estimate_bits),
        num(r.mi_corrected_bits),
    )
}
