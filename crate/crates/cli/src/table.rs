//! Column-ordered result tables and their serialization.  Floats are written
//! with 17 significant digits so a CSV parsed back yields bit-identical
//! values.

use std::fmt;
use std::path::Path;

use anyhow::{ensure, Context, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Str(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Str(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.headers.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Write a table to `path` in the requested format.  CSV carries one header
/// row; JSON is an array of flat objects keyed by the headers, with floats
/// as JSON numbers (serde_json prints them so they parse back bit-equal).
pub fn emit(table: &Table, format: Format, path: &Path) -> Result<()> {
    ensure!(!table.is_empty(), "refusing to emit an empty table");
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path)
                .with_context(|| format!("creating {}", path.display()))?;
            w.write_record(table.headers())?;
            for row in table.rows() {
                w.write_record(row.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut items = Vec::with_capacity(table.rows().len());
            for row in table.rows() {
                let mut obj = serde_json::Map::new();
                for (h, cell) in table.headers().iter().zip(row) {
                    let v = match cell {
                        Cell::Float(x) => serde_json::Number::from_f64(*x)
                            .map(serde_json::Value::Number)
                            .unwrap_or_else(|| serde_json::Value::String(x.to_string())),
                        Cell::Int(n) => serde_json::Value::Number((*n).into()),
                        Cell::Str(s) => serde_json::Value::String(s.clone()),
                    };
                    obj.insert(h.clone(), v);
                }
                items.push(serde_json::Value::Object(obj));
            }
            let text = serde_json::to_string_pretty(&serde_json::Value::Array(items))?;
            std::fs::write(path, text + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}
