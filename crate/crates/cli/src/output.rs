//! Report assembly and the single writer that puts files on disk.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

/// A run that could not produce a report.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical { probe: String, message: String },
}

impl Failure {
    pub fn numerical(probe: &str, e: impl fmt::Display) -> Self {
        Failure::Numerical {
            probe: probe.into(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical { .. } => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Numerical { probe, message } => write!(f, "numerical failure in probe `{probe}`: {message}"),
        }
    }
}

/// Wraps a library error with the name of the probe that raised it.
pub fn probe<T>(name: &str, r: lmcf::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::numerical(name, e))
}

/// An asserted invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<=",
            limit,
            passed: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">=",
            limit,
            passed: value >= limit,
        }
    }

    /// A yes/no invariant, recorded as value 1 (true) or 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            relation: "==",
            limit: 1.0,
            passed: ok,
        }
    }
}

pub struct Output {
    command: &'static str,
    config: Value,
    report: Map<String, Value>,
    files: Vec<(String, String)>,
    checks: Vec<Check>,
    summary: Vec<String>,
}

impl Output {
    pub fn new(command: &'static str, config: &impl Serialize) -> Self {
        Self {
            command,
            config: serde_json::to_value(config).expect("config serializes"),
            report: Map::new(),
            files: Vec::new(),
            checks: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.report.insert(
            key.into(),
            serde_json::to_value(value).expect("report values serialize"),
        );
    }

    pub fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn report_json(&self) -> String {
        let mut root = Map::new();
        root.insert("command".into(), Value::String(self.command.into()));
        root.insert("config".into(), self.config.clone());
        for (k, v) in &self.report {
            root.insert(k.clone(), v.clone());
        }
        root.insert(
            "checks".into(),
            serde_json::to_value(&self.checks).expect("checks serialize"),
        );
        root.insert("passed".into(), Value::Bool(self.passed()));
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("report serializes");
        s.push('\n');
        s
    }

    fn summary_text(&self) -> String {
        let mut s = format!("lmcf {}\n", self.command);
        for l in &self.summary {
            s.push_str(l);
            s.push('\n');
        }
        if !self.checks.is_empty() {
            s.push_str("\nchecks:\n");
            for c in &self.checks {
                s.push_str(&format!(
                    "  {} {}: {:.6e} {} {:.6e}\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.relation,
                    c.limit
                ));
            }
        }
        s.push_str(if self.passed() {
            "\nstatus: ok\n"
        } else {
            "\nstatus: invariant violated\n"
        });
        s
    }

    /// Writes every file into `dir`; returns the process exit code.
    pub fn write(&self, dir: &Path) -> std::io::Result<i32> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.report_json())?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        let summary = self.summary_text();
        std::fs::write(dir.join("summary.txt"), &summary)?;
        print!("{summary}");
        Ok(if self.passed() { 0 } else { 3 })
    }
}
