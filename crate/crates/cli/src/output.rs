use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scenarios::{Outcome, Table};

pub const SCHEMA_VERSION: u32 = 1;

const ONE_SIDED: &str = "bound checks compare a norm estimate from below with an analytic bound from above; truncation can weaken a check but cannot produce a false violation";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub sign: f64,
    pub residual: f64,
    pub rejected_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TableRecord {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub status: String,
    pub error: Option<String>,
    pub checks: Vec<CheckRecord>,
    pub values: BTreeMap<String, f64>,
    pub quadrature_orders: Vec<usize>,
    pub mc_samples: Vec<usize>,
    pub calibration: Option<CalibrationRecord>,
    pub table: TableRecord,
    pub note: String,
}

impl Summary {
    pub fn new(scenario: &str, seed: u64, outcome: &Outcome) -> Self {
        let passed = outcome.checks.iter().all(|c| c.passed);
        Summary {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.into(),
            seed,
            status: if passed { "pass" } else { "fail" }.into(),
            error: None,
            checks: outcome
                .checks
                .iter()
                .map(|c| CheckRecord {
                    name: c.name.clone(),
                    value: c.value,
                    threshold: c.threshold,
                    passed: c.passed,
                })
                .collect(),
            values: outcome.values.clone(),
            quadrature_orders: outcome.quadrature_orders.clone(),
            mc_samples: outcome.mc_samples.clone(),
            calibration: calibration(),
            table: table_record(&outcome.report),
            note: ONE_SIDED.into(),
        }
    }

    pub fn failed(scenario: &str, seed: u64, error: String) -> Self {
        Summary {
            status: "non-convergence".into(),
            error: Some(error),
            ..Summary::new(scenario, seed, &Outcome::default())
        }
    }
}

fn calibration() -> Option<CalibrationRecord> {
    fockweyl::quantize::calibration().ok().map(|c| CalibrationRecord {
        sign: c.sign,
        residual: c.residual,
        rejected_residual: c.rejected_residual,
    })
}

fn table_record(t: &Table) -> TableRecord {
    TableRecord {
        columns: t.columns.iter().map(|c| c.to_string()).collect(),
        rows: t.rows.iter().map(|r| r.iter().map(|c| c.render()).collect()).collect(),
    }
}

pub fn csv_text(t: &Table) -> String {
    let mut s = t.columns.join(",");
    s.push('\n');
    for r in &t.rows {
        let cells: Vec<String> = r
            .iter()
            .map(|c| {
                let v = c.render();
                if v.contains([',', '"', '\n']) {
                    format!("\"{}\"", v.replace('"', "\"\""))
                } else {
                    v
                }
            })
            .collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn write_json(dir: &Path, summary: &Summary) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(summary).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(dir.join("summary.json"), text)
}

pub fn write_csv(dir: &Path, t: &Table) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.csv"), csv_text(t))
}

fn grid(out: &mut String, columns: &[String], rows: &[Vec<String>]) {
    let mut width: Vec<usize> = columns.iter().map(|c| c.chars().count()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let _ = writeln!(out, "{}", line(columns));
    let _ = writeln!(out, "{}", width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
}

/// Plain-text rendering of a summary; the same JSON always gives the same text.
pub fn render(s: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}  seed {}  status {}", s.scenario, s.seed, s.status);
    if let Some(e) = &s.error {
        let _ = writeln!(out, "error: {e}");
    }
    let _ = writeln!(out);
    let columns: Vec<String> = ["check", "value", "threshold", "result"].iter().map(|c| c.to_string()).collect();
    let rows: Vec<Vec<String>> = s
        .checks
        .iter()
        .map(|c| vec![c.name.clone(), format!("{:.6e}", c.value), format!("{:.3e}", c.threshold), if c.passed { "pass" } else { "FAIL" }.into()])
        .collect();
    grid(&mut out, &columns, &rows);
    if !s.table.columns.is_empty() {
        let _ = writeln!(out);
        let rows: Vec<Vec<String>> = s
            .table
            .rows
            .iter()
            .map(|r| r.iter().map(|c| shorten(c)).collect())
            .collect();
        grid(&mut out, &s.table.columns, &rows);
    }
    out
}

/// Shows numbers with seven significant digits.
fn shorten(cell: &str) -> String {
    if cell.contains('e') {
        if let Ok(x) = cell.parse::<f64>() {
            return format!("{x:.6e}");
        }
    }
    cell.to_string()
}
