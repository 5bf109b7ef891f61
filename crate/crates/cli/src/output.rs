//! CSV and JSON writers. Every file starts with the artifact version and the
//! resolved configuration; floats carry 17 significant digits.

use std::fs;
use std::path::PathBuf;

use serde_json::{json, Map, Value};

use qcwork::wigner::WignerField;

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const VERSION: &str = concat!("qcwork ", env!("CARGO_PKG_VERSION"));

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => num(*v),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// A schema-tagged table with an optional summary block.
#[derive(Clone, Debug)]
pub struct Table {
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
}

impl Table {
    pub fn new(schema: &'static str, columns: &[&'static str]) -> Self {
        Self {
            schema,
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn summarize(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }
}

fn header(cfg: &RunConfig, schema: &str) -> String {
    let mut s = format!("# {VERSION}\n# schema: {schema}\n");
    for (k, v) in cfg.header_lines() {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s
}

fn config_json(cfg: &RunConfig) -> Value {
    let mut m = Map::new();
    for (k, v) in cfg.header_lines() {
        m.insert(k, json!(v));
    }
    Value::Object(m)
}

fn target(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    Ok(cfg.out.join(format!("{name}.{}", cfg.format)))
}

fn write(path: PathBuf, text: String) -> Result<PathBuf, CliError> {
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_table(cfg: &RunConfig, name: &str, table: &Table) -> Result<PathBuf, CliError> {
    let path = target(cfg, name)?;
    let text = match cfg.format {
        Format::Csv => {
            let mut s = header(cfg, table.schema);
            for (k, v) in &table.summary {
                s.push_str(&format!("# summary {k} = {}\n", v.csv()));
            }
            s.push_str(&table.columns.join(","));
            s.push('\n');
            for row in &table.rows {
                s.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let mut summary = Map::new();
            for (k, v) in &table.summary {
                summary.insert(k.clone(), v.json());
            }
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                .collect();
            let doc = json!({
                "version": VERSION,
                "schema": table.schema,
                "config": config_json(cfg),
                "summary": summary,
                "columns": table.columns,
                "rows": rows,
            });
            pretty(&doc)
        }
    };
    write(path, text)
}

/// Row-major dump: one row per `x`, one column per `p`.
pub fn write_field(cfg: &RunConfig, name: &str, field: &WignerField) -> Result<PathBuf, CliError> {
    let path = target(cfg, name)?;
    let g = &field.grid;
    let text = match cfg.format {
        Format::Csv => {
            let mut s = header(cfg, "field/1");
            s.push_str(&format!("{},{}\n", fmt_f64(g.x_min), fmt_f64(g.x_max)));
            s.push_str(&format!("{},{}\n", fmt_f64(g.p_min), fmt_f64(g.p_max)));
            s.push_str(&format!("{},{}\n", g.n_x, g.n_p));
            for row in field.values.chunks(g.n_p) {
                s.push_str(&row.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let values: Vec<Value> = field
                .values
                .chunks(g.n_p)
                .map(|r| Value::Array(r.iter().map(|&v| num(v)).collect()))
                .collect();
            pretty(&json!({
                "version": VERSION,
                "schema": "field/1",
                "config": config_json(cfg),
                "x_range": [num(g.x_min), num(g.x_max)],
                "p_range": [num(g.p_min), num(g.p_max)],
                "counts": [g.n_x, g.n_p],
                "values": values,
            }))
        }
    };
    write(path, text)
}

fn pretty(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).unwrap_or_default();
    s.push('\n');
    s
}
