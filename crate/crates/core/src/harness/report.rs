//! Verification reports and their JSON/CSV output.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// One check: what was computed, what it was compared with, and the slack.
/// `margin >= 0` exactly when the comparison holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub citation: String,
    pub computed: Value,
    pub bound: Value,
    pub pass: bool,
    pub margin: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub suite: String,
    pub n: usize,
    pub sigma: f64,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub grids: BTreeMap<String, Vec<f64>>,
    pub config_hash: String,
}

/// Constants realized by a run; absent ones serialize as `null`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Constants {
    #[serde(rename = "R")]
    pub r: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub delta0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub b: Option<f64>,
}

/// A named numeric table written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.12e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub meta: ReportMeta,
    pub constants: Constants,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
    #[serde(skip)]
    pub tables: Vec<CsvTable>,
}

impl VerificationReport {
    pub fn new(meta: ReportMeta) -> Self {
        Self { meta, constants: Constants::default(), checks: Vec::new(), pass: true, tables: Vec::new() }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    /// Every check carries a nonempty citation.
    pub fn is_well_formed(&self) -> bool {
        self.checks.iter().all(|c| !c.citation.trim().is_empty())
    }

    /// Full report including runtimes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Report with every `runtime_ms` removed; identical configurations give
    /// identical payloads.
    pub fn payload_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(checks) = v.get_mut("checks").and_then(Value::as_array_mut) {
            for c in checks {
                if let Some(obj) = c.as_object_mut() {
                    obj.remove("runtime_ms");
                }
            }
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {:<44} margin {:+.3e}  [{}]\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.margin,
                c.citation
            ));
        }
        s.push_str(&format!("{}: {}\n", self.meta.suite, if self.pass { "all checks pass" } else { "FAILED" }));
        s
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn write_tables(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in &self.tables {
            std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv()?)?;
        }
        Ok(())
    }
}

/// Runs `f` and records how long it took.
pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64() * 1e3)
}

/// Builder for [`CheckRecord`].
pub(crate) struct Check {
    name: String,
    citation: String,
}

impl Check {
    pub(crate) fn new(name: &str, citation: &str) -> Self {
        Self { name: name.into(), citation: citation.into() }
    }

    pub(crate) fn record(self, computed: Value, bound: Value, pass: bool, margin: f64, ms: f64) -> CheckRecord {
        CheckRecord {
            name: self.name,
            citation: self.citation,
            computed,
            bound,
            pass: pass && !margin.is_nan(),
            margin,
            runtime_ms: ms,
        }
    }

    /// Passes when `computed <= bound`.
    pub(crate) fn at_most(self, computed: f64, bound: f64, ms: f64) -> CheckRecord {
        let margin = bound - computed;
        self.record(json!(computed), json!(bound), margin >= 0.0, margin, ms)
    }

    /// Passes when `computed >= bound`.
    pub(crate) fn at_least(self, computed: f64, bound: f64, ms: f64) -> CheckRecord {
        let margin = computed - bound;
        self.record(json!(computed), json!(bound), margin >= 0.0, margin, ms)
    }

    /// A computation that failed before it could be compared.
    pub(crate) fn failed(self, err: &Error, ms: f64) -> CheckRecord {
        self.record(json!({ "error": err.to_string() }), Value::Null, false, f64::NAN, ms)
    }
}
