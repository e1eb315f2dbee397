use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

/// Where an expected value comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Stated in the source text the scenario reproduces.
    Published,
    /// Follows by inspection (symmetry, linearity).
    Trivial,
    /// Computed by an independent oracle script under `oracles/`.
    Derived(&'static str),
}

impl Provenance {
    pub fn label(&self) -> String {
        match self {
            Provenance::Published => "published".into(),
            Provenance::Trivial => "trivial".into(),
            Provenance::Derived(script) => format!("derived:{script}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// |actual − expected| ≤ tolerance
    Close,
    /// actual ≤ expected + tolerance
    AtMost,
    /// actual ≥ expected − tolerance
    AtLeast,
    /// string equality
    Equal,
}

/// One compared expectation; a line of the records export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationRecord {
    pub scenario: String,
    pub expectation: String,
    pub relation: Relation,
    pub expected: Value,
    pub actual: Value,
    pub tolerance: f64,
    pub pass: bool,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub seed: u64,
    pub budget: Option<usize>,
    pub expectations: Vec<ExpectationRecord>,
    /// Scenario outputs (verdicts, witnesses, certified constants).
    pub outputs: serde_json::Map<String, Value>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        !self.expectations.is_empty() && self.expectations.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ExpectationRecord> {
        self.expectations.iter().filter(|e| !e.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    #[default]
    Table,
    Records,
    Csv,
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Serializes records. Output depends only on the records, so identical
/// runs export identical bytes.
pub fn export_report<W: Write>(records: &[RunRecord], format: ExportFormat, mut out: W) -> Result<()> {
    match format {
        ExportFormat::Records => {
            for r in records {
                for e in &r.expectations {
                    let line = serde_json::to_string(e).map_err(|e| crate::Error::Io(e.to_string()))?;
                    writeln!(out, "{line}")?;
                }
            }
        }
        ExportFormat::Csv => {
            writeln!(out, "scenario,expectation,relation,expected,actual,tolerance,pass,provenance")?;
            for r in records {
                for e in &r.expectations {
                    let rel = serde_json::to_value(e.relation).map(|v| value_text(&v)).unwrap_or_default();
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        csv_field(&e.scenario),
                        csv_field(&e.expectation),
                        rel,
                        csv_field(&value_text(&e.expected)),
                        csv_field(&value_text(&e.actual)),
                        e.tolerance,
                        e.pass,
                        csv_field(&e.provenance)
                    )?;
                }
            }
        }
        ExportFormat::Table => {
            out.write_all(table(records).as_bytes())?;
        }
    }
    Ok(())
}

fn table(records: &[RunRecord]) -> String {
    let mut rows: Vec<[String; 6]> = vec![[
        "scenario".into(),
        "expectation".into(),
        "expected".into(),
        "actual".into(),
        "tol".into(),
        "result".into(),
    ]];
    for r in records {
        for e in &r.expectations {
            let op = match e.relation {
                Relation::Close => "≈ ",
                Relation::AtMost => "≤ ",
                Relation::AtLeast => "≥ ",
                Relation::Equal => "= ",
            };
            rows.push([
                e.scenario.clone(),
                e.expectation.clone(),
                format!("{op}{}", short(&e.expected)),
                short(&e.actual),
                format!("{:.0e}", e.tolerance),
                if e.pass { "pass".into() } else { "FAIL".into() },
            ]);
        }
    }
    let widths: Vec<usize> = (0..6).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut s = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(s, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(s, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        }
    }
    let total: usize = records.iter().map(|r| r.expectations.len()).sum();
    let failed: usize = records.iter().map(|r| r.failures().count()).sum();
    let _ = writeln!(s, "\n{} scenario(s), {} expectation(s), {} failed", records.len(), total, failed);
    s
}

fn short(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) => format!("{x:.6e}"),
            Some(x) => format!("{}", (x * 1e9).round() / 1e9),
            None => n.to_string(),
        },
        other => value_text(other),
    }
}
