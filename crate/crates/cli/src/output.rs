//! In-memory results and their serialisation.
//!
//! Nothing touches the disk until a scenario has finished; [`write_files`]
//! then writes everything and removes what it wrote if any write fails.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Equal-length named columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        Table {
            name: name.into(),
            columns: Vec::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        debug_assert!(self.columns.first().map_or(true, |c| c.values.len() == values.len()));
        self.columns.push(Column {
            name: name.into(),
            values,
        });
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }
}

/// Everything a scenario produces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub summary: Value,
    /// `(file stem, text)` written as `.txt`.
    pub texts: Vec<(String, String)>,
}

impl Artifacts {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Provenance stamped into every file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub units: String,
    pub parameters: Value,
}

impl Metadata {
    fn header_lines(&self) -> Vec<String> {
        vec![
            format!("tool: {} {}", self.tool, self.version),
            format!("scenario: {}", self.scenario),
            format!("seed: {}", self.seed),
            format!("units: {}", self.units),
            format!("parameters: {}", self.parameters),
        ]
    }
}

/// 17 significant digits, scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn csv(table: &Table, meta: &Metadata) -> String {
    let mut s = String::new();
    for line in meta.header_lines() {
        let _ = writeln!(s, "# {line}");
    }
    let names: Vec<&str> = table.columns.iter().map(|c| c.name.as_str()).collect();
    let _ = writeln!(s, "{}", names.join(","));
    for i in 0..table.rows() {
        let row: Vec<String> = table.columns.iter().map(|c| format_float(c.values[i])).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn table_json(table: &Table, meta: &Metadata) -> String {
    let columns: Vec<Value> = table
        .columns
        .iter()
        .map(|c| json!({ "name": c.name, "values": c.values }))
        .collect();
    let v = json!({ "metadata": meta, "table": table.name, "columns": columns });
    serde_json::to_string_pretty(&v).unwrap_or_default() + "\n"
}

/// Relative file names and contents, in a fixed order.
pub fn render(art: &Artifacts, meta: &Metadata, formats: &[Format]) -> Vec<(PathBuf, String)> {
    let mut files = Vec::new();
    for t in &art.tables {
        for f in formats {
            match f {
                Format::Csv => files.push((PathBuf::from(format!("{}.csv", t.name)), csv(t, meta))),
                Format::Json => files.push((PathBuf::from(format!("{}.json", t.name)), table_json(t, meta))),
            }
        }
    }
    for (stem, text) in &art.texts {
        let mut s = String::new();
        for line in meta.header_lines() {
            let _ = writeln!(s, "# {line}");
        }
        s.push_str(text);
        files.push((PathBuf::from(format!("{stem}.txt")), s));
    }
    let summary = json!({ "metadata": meta, "summary": art.summary });
    files.push((
        PathBuf::from("summary.json"),
        serde_json::to_string_pretty(&summary).unwrap_or_default() + "\n",
    ));
    files
}

/// Writes every file under `dir`. On failure, files written so far are
/// removed and the first error is returned with the offending path.
pub fn write_files(dir: &Path, files: &[(PathBuf, String)]) -> Result<Vec<PathBuf>, (io::Error, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| (e, dir.to_path_buf()))?;
    let mut written = Vec::new();
    for (name, contents) in files {
        let target = dir.join(name);
        let partial = dir.join(format!(".{}.partial", name.display()));
        let res = fs::write(&partial, contents).and_then(|_| fs::rename(&partial, &target));
        if let Err(e) = res {
            let _ = fs::remove_file(&partial);
            for w in &written {
                let _ = fs::remove_file(w);
            }
            return Err((e, target));
        }
        written.push(target);
    }
    Ok(written)
}
