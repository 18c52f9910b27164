//! Result files.
//!
//! Every number leaves the crate through here, rounded to nine significant
//! digits, so the same inputs give byte-identical files on any platform.
//! An [`OutputDir`] records the SHA-256 digest of each file it writes and
//! finishes with a `manifest.json` listing them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::BudgetSpec;
use crate::error::{Error, Result};
use crate::experiment::{Baseline, FrameTrace, RunResult, Scenario, SweepEntry, SweepReport};
use crate::optics::{
    back_reflection_mu, max_discrimination_prob, ReflectionEntry, OTDR_FLOOR_1550_DB, OTDR_FLOOR_806_DB,
};

/// Column order of result tables.
pub const RESULT_COLUMNS: [&str; 12] = [
    "r", "n_ab", "n_el", "n_ss", "q", "gamma_obs", "gamma_exp", "delta_b", "f_known", "i_act", "i_est",
    "feasible",
];

pub const TRACE_COLUMNS: [&str; 11] = [
    "slot", "class", "state", "photons_at_bob", "m0", "m1", "p0", "p1", "outcome", "conclusive",
    "eve_knows",
];

pub const BUDGET_COLUMNS: [&str; 8] = [
    "label", "delay_ns", "wavelength_nm", "level_db", "mu_in", "mu_out", "max_success", "detectable",
];

/// `x` with nine significant digits, `%g` style: plain decimals for
/// moderate magnitudes, exponent form otherwise, no trailing zeros.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `x` rounded to nine significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.8e}").parse().expect("round trip")
    } else {
        x
    }
}

/// Round every float inside a JSON tree.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n
            .as_f64()
            .and_then(|f| serde_json::Number::from_f64(round_sig(f)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Serialize `value` to pretty JSON with rounded floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&round_json(v)).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

fn result_row(r: &RunResult) -> Vec<String> {
    vec![
        fmt_sig(r.r),
        r.triad.n_ab.to_string(),
        r.triad.n_el.to_string(),
        r.triad.n_ss.to_string(),
        fmt_sig(r.q),
        fmt_sig(r.gamma_obs),
        fmt_sig(r.gamma_exp),
        fmt_sig(r.delta_b),
        fmt_sig(r.f_known),
        fmt_sig(r.i_act),
        fmt_sig(r.i_est),
        r.feasible.to_string(),
    ]
}

/// Result table; failed sweep points are left out (they appear in the summary).
pub fn results_csv<'a>(results: impl IntoIterator<Item = &'a RunResult>) -> Result<String> {
    csv_text(&RESULT_COLUMNS, results.into_iter().map(result_row))
}

/// Slot-by-slot table of one frame.
pub fn trace_csv(trace: &FrameTrace) -> Result<String> {
    let n = trace.classes.len();
    let rows = (0..n).map(|i| {
        vec![
            (i + 1).to_string(),
            trace.classes[i].label().to_string(),
            trace.states[i].to_string(),
            trace.photons_at_bob[i].to_string(),
            trace.m0[i].to_string(),
            trace.m1[i].to_string(),
            fmt_sig(trace.p0[i]),
            fmt_sig(trace.p1[i]),
            trace.outcomes[i].label().to_string(),
            u8::from(trace.conclusive[i]).to_string(),
            u8::from(trace.eve_knows[i]).to_string(),
        ]
    });
    csv_text(&TRACE_COLUMNS, rows)
}

/// One row of the photon-budget table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetRow {
    pub entry: ReflectionEntry,
    pub mu_in: f64,
    pub mu_out: f64,
    pub max_success: f64,
    /// Whether the reflection rises above the OTDR floor for its wavelength.
    pub detectable: Option<bool>,
}

pub fn budget_rows(spec: &BudgetSpec) -> Result<Vec<BudgetRow>> {
    spec.reflections
        .iter()
        .map(|e| {
            let mu_out = back_reflection_mu(spec.mu_in, e.level_db)?;
            let floor = if e.wavelength_nm == 1550.0 {
                Some(OTDR_FLOOR_1550_DB)
            } else if e.wavelength_nm == 806.0 {
                Some(OTDR_FLOOR_806_DB)
            } else {
                None
            };
            Ok(BudgetRow {
                entry: e.clone(),
                mu_in: spec.mu_in,
                mu_out,
                max_success: max_discrimination_prob(mu_out),
                detectable: floor.map(|f| e.level_db >= f),
            })
        })
        .collect()
}

pub fn budget_csv(rows: &[BudgetRow]) -> Result<String> {
    csv_text(
        &BUDGET_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.entry.label.clone(),
                fmt_sig(r.entry.delay_ns),
                fmt_sig(r.entry.wavelength_nm),
                fmt_sig(r.entry.level_db),
                fmt_sig(r.mu_in),
                fmt_sig(r.mu_out),
                fmt_sig(r.max_success),
                r.detectable.map_or("unknown".into(), |d| d.to_string()),
            ]
        }),
    )
}

/// The three attack conditions of one result, each as pass/fail.
pub fn criteria(r: &RunResult, scenario: &Scenario) -> Value {
    json!({
        "qber_below_abort": r.q < scenario.thresholds.q_abort,
        "rate_within_tolerance": r.delta_b <= scenario.thresholds.delta_max,
        "leakage_positive": r.i_act > r.i_est,
    })
}

pub fn baseline_summary(scenario: &Scenario, seed: u64, b: &Baseline) -> Value {
    json!({
        "command": "baseline",
        "seed": seed,
        "scenario": scenario,
        "status": if b.qber.is_some() { "ok" } else { "no-data" },
        "gamma_exp": b.gamma_exp,
        "gamma_se": b.gamma_se,
        "qber": b.qber,
        "qber_se": b.qber_se,
        "tally": b.tally,
    })
}

pub fn run_summary(scenario: &Scenario, seed: u64, r: &RunResult) -> Value {
    json!({
        "command": "simulate",
        "seed": seed,
        "scenario": scenario,
        "result": r,
        "margin": r.margin(),
        "criteria": criteria(r, scenario),
        "feasible": r.feasible,
    })
}

pub fn sweep_summary(scenario: &Scenario, seed: u64, rep: &SweepReport) -> Value {
    let failures: Vec<&SweepEntry> = rep.entries.iter().filter(|e| e.result().is_none()).collect();
    let best = rep.best().map(|r| {
        json!({
            "result": r,
            "margin": r.margin(),
            "criteria": criteria(r, scenario),
        })
    });
    json!({
        "command": "sweep",
        "seed": seed,
        "scenario": scenario,
        "baseline": rep.baseline,
        "combinations": rep.entries.len(),
        "feasible_count": rep.feasible_count(),
        "best": best,
        "failures": failures,
    })
}

/// A written file and its digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Provenance of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// An output directory that remembers what was written into it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::Io(format!("{}: {e}", root.display())))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.files.retain(|f| f.file != name);
        self.files.push(ManifestEntry {
            file: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<PathBuf> {
        let text = to_json(value)?;
        self.write(name, &text)
    }

    /// Write `manifest.json` and return the manifest.
    pub fn finish(self, command: &str, config: Option<&Path>, seed: u64) -> Result<RunManifest> {
        let mut files = self.files;
        files.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = RunManifest {
            command: command.to_string(),
            config: config.map(Path::to_path_buf),
            seed,
            out_dir: self.root.clone(),
            files,
        };
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, to_json(&manifest)?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(manifest)
    }
}

/// Flatten a JSON object into `key = value` lines for terminal output.
pub fn key_values(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<String>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, x, out);
                }
            }
            Value::Number(n) => out.push(format!(
                "{prefix} = {}",
                n.as_f64().filter(|_| !(n.is_i64() || n.is_u64())).map_or(n.to_string(), fmt_sig)
            )),
            Value::Array(_) => {}
            other => out.push(format!("{prefix} = {other}")),
        }
    }
    let mut out = Vec::new();
    walk("", v, &mut out);
    out.join("\n")
}

/// Keep only the named top-level keys of a JSON object.
pub fn select(v: &Value, keys: &[&str]) -> Value {
    let mut m = Map::new();
    if let Value::Object(o) = v {
        for k in keys {
            if let Some(x) = o.get(*k) {
                m.insert((*k).to_string(), x.clone());
            }
        }
    }
    Value::Object(m)
}
