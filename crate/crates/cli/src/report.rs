//! JSON-lines records, CSV tables and the run summary.
//!
//! Everything except `runtimes.json` is a pure function of the config and
//! seed, so reruns compare byte for byte. Execution settings (`out`,
//! `workers`) go to `runtimes.json` with the wall times.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const ARTIFACT: &str = concat!("logconc ", env!("CARGO_PKG_VERSION"));
/// Keys describing how a run executed rather than what it computed.
pub const EXECUTION_KEYS: &[&str] = &["out", "workers"];

pub const RNG_ID: &str = "chacha8; replica k of every estimate draws from substream k";

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Report {
    experiment: String,
    lines: Vec<String>,
    tables: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub oracle_calls: u64,
    runtimes: Vec<(String, f64)>,
    error: Option<(String, i32)>,
}

impl Report {
    pub fn new(experiment: &str) -> Self {
        Self { experiment: experiment.to_string(), ..Self::default() }
    }

    /// Appends one record; NaN and infinities serialize as `null`.
    pub fn record(&mut self, kind: &str, data: impl Serialize) {
        let data = serde_json::to_value(data).unwrap_or_else(|e| json!({ "serialization-error": e.to_string() }));
        let line = json!({ "experiment": self.experiment, "kind": kind, "data": data });
        self.lines.push(line.to_string());
    }

    pub fn table(&mut self, name: &str, csv: String) {
        self.tables.insert(name.to_string(), csv);
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    /// Runs `f` and stores its wall time under `label`.
    pub fn timed<T>(&mut self, label: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let t0 = Instant::now();
        let out = f(self);
        self.runtimes.push((label.to_string(), t0.elapsed().as_secs_f64()));
        out
    }

    pub fn fail(&mut self, err: &CliError) {
        self.error = Some((err.to_string(), err.exit_code()));
    }

    pub fn error(&self) -> Option<&str> {
        self.error.as_ref().map(|e| e.0.as_str())
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some((_, code)) => *code,
            None if self.all_pass() => 0,
            None => 1,
        }
    }

    pub fn jsonl(&self) -> String {
        let mut s = self.lines.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s
    }

    pub fn tables(&self) -> &BTreeMap<String, String> {
        &self.tables
    }

    pub fn runtimes(&self) -> &[(String, f64)] {
        &self.runtimes
    }

    pub fn summary(&self, config: &ExperimentConfig) -> Value {
        json!({
            "artifact": ARTIFACT,
            "rng": RNG_ID,
            "experiment": self.experiment,
            "config": config.entries().iter().filter(|(k, _)| !EXECUTION_KEYS.contains(&k.as_str())).collect::<BTreeMap<_, _>>(),
            "checks": self.checks,
            "all_pass": self.all_pass(),
            "oracle_calls": self.oracle_calls,
            "error": self.error.as_ref().map(|e| &e.0),
            "exit_code": self.exit_code(),
        })
    }

    /// Writes `records.jsonl`, `summary.json`, one CSV per table and
    /// `runtimes.json` into `dir`.
    pub fn write(&self, dir: &Path, config: &ExperimentConfig) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("records.jsonl"), self.jsonl())?;
        for (name, csv) in &self.tables {
            fs::write(dir.join(format!("{name}.csv")), csv)?;
        }
        let summary = serde_json::to_string_pretty(&self.summary(config)).expect("summary serializes");
        fs::write(dir.join("summary.json"), summary + "\n")?;
        let timings: BTreeMap<&str, f64> = self.runtimes.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let execution: BTreeMap<&str, Option<&str>> = EXECUTION_KEYS.iter().map(|k| (*k, config.get(k))).collect();
        let rt = json!({ "execution": execution, "seconds": timings });
        fs::write(dir.join("runtimes.json"), serde_json::to_string_pretty(&rt).expect("runtimes serialize") + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_becomes_null() {
        let mut r = Report::new("x");
        r.record("v", json!({ "a": f64::NAN }));
        r.record("v", [1.0, f64::INFINITY]);
        assert_eq!(r.jsonl(), "{\"data\":{\"a\":null},\"experiment\":\"x\",\"kind\":\"v\"}\n{\"data\":[1.0,null],\"experiment\":\"x\",\"kind\":\"v\"}\n");
    }

    #[test]
    fn exit_codes() {
        let mut r = Report::new("x");
        assert_eq!(r.exit_code(), 0);
        r.check("a", false, "");
        assert_eq!(r.exit_code(), 1);
        r.fail(&CliError::Core(logconc_core::Error::BudgetExhausted { oracle_calls: 5 }));
        assert_eq!(r.exit_code(), 3);
    }
}
