//! Rendering of command results as aligned tables, CSV or JSON.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// One cell of tabular output.
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
    Flag(bool),
}

impl Cell {
    /// Full precision, shortest round-trip representation.
    fn exact(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Flag(v) => v.to_string(),
        }
    }

    fn human(&self) -> String {
        match self {
            Cell::Num(v) if *v == 0.0 || !v.is_finite() => v.to_string(),
            Cell::Num(v) if (1e-3..1e6).contains(&v.abs()) => format!("{v:.4}"),
            Cell::Num(v) => format!("{v:.4e}"),
            other => other.exact(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

/// A command result that can be shown as a table and serialized as JSON.
pub trait Report: Serialize {
    fn columns(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<Cell>>;
}

fn aligned(columns: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = columns.iter().map(|c| c.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, columns);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut out, &rule);
    for row in rows {
        line(&mut out, row);
    }
    out
}

pub fn render<R: Report>(report: &R, format: Format) -> Result<String> {
    let columns = report.columns();
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Table => {
            let rows: Vec<Vec<String>> = report.rows().iter().map(|r| r.iter().map(Cell::human).collect()).collect();
            Ok(aligned(&columns, &rows))
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(&columns)?;
            for row in report.rows() {
                writer.write_record(row.iter().map(Cell::exact))?;
            }
            Ok(String::from_utf8(writer.into_inner().context("flushing CSV output")?)?)
        }
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}
