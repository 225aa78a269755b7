//! Result tables, CSV with a `#` metadata header, and the JSON mirror.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Identifier of the build that produced an output.
pub fn build_id() -> &'static str {
    match option_env!("W2S_BUILD_ID") {
        Some(id) => id,
        None => "unknown",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:?}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Str(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Str(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) if !v.is_finite() => Value::Null,
            other => serde_json::to_value(other).unwrap_or(Value::Null),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Float)
    }
}

/// Rows under a fixed, ordered list of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the schema");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Values of `name` across rows.
    pub fn values<'a>(&'a self, name: &str) -> impl Iterator<Item = &'a Cell> + 'a {
        let idx = self.column(name);
        self.rows.iter().filter_map(move |r| idx.map(|i| &r[i]))
    }
}

/// Metadata lines: schema, build, experiment, and each config entry.
pub fn header(cfg: &ExperimentConfig, extra: &[(String, String)]) -> Vec<(String, String)> {
    let mut h = vec![
        ("schema_version".to_string(), SCHEMA_VERSION.to_string()),
        ("tool".to_string(), format!("w2s-lab {}", env!("CARGO_PKG_VERSION"))),
        ("build".to_string(), build_id().to_string()),
        ("experiment".to_string(), cfg.experiment.to_string()),
    ];
    for (k, v, defaulted) in &cfg.echo {
        let v = if *defaulted { format!("{v} (default)") } else { v.clone() };
        h.push((format!("config.{k}"), v));
    }
    h.extend(extra.iter().cloned());
    h
}

pub fn render_csv(meta: &[(String, String)], table: &Table) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        let _ = writeln!(s, "# {k}: {v}");
    }
    let _ = writeln!(s, "{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

pub fn render_json(meta: &[(String, String)], table: &Table) -> Value {
    let meta: serde_json::Map<String, Value> =
        meta.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let obj: serde_json::Map<String, Value> =
                table.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect();
            Value::Object(obj)
        })
        .collect();
    json!({ "metadata": meta, "columns": table.columns, "rows": rows })
}

/// Writes `contents` to `path`, creating parent directories; an existing file
/// is an error unless `force`.
pub fn write_new(path: &Path, contents: &str, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(LabError::Config(format!("{} exists; pass --force to overwrite", path.display())));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

pub fn json_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Writes the CSV (and JSON mirror when requested) or prints the CSV to stdout.
pub fn emit(cfg: &ExperimentConfig, meta: &[(String, String)], table: &Table) -> Result<()> {
    let csv = render_csv(meta, table);
    match &cfg.out {
        Some(path) => {
            let jpath = cfg.json.then(|| json_path(path));
            if !cfg.force {
                for p in std::iter::once(path.as_path()).chain(jpath.as_deref()) {
                    if p.exists() {
                        return Err(LabError::Config(format!("{} exists; pass --force to overwrite", p.display())));
                    }
                }
            }
            write_new(path, &csv, cfg.force)?;
            if let Some(j) = jpath {
                let text = serde_json::to_string_pretty(&render_json(meta, table))?;
                write_new(&j, &(text + "\n"), cfg.force)?;
            }
        }
        None => print!("{csv}"),
    }
    Ok(())
}
