//! Tables, reports and the files they are written to.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;

/// A plot-ready table. Cells are already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner()
            .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
    }

    fn to_json(&self) -> Value {
        json!({ "header": self.header, "rows": self.rows })
    }
}

/// Shortest round-trip decimal, `NA` for missing or non-finite values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "NA".into()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), num)
}

/// Finite floats as JSON numbers, everything else as `null`.
pub fn jnum(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn jvec(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| jnum(x)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub command: &'static str,
    pub report: Value,
    pub tables: Vec<Table>,
    /// Nonzero when the run completed but hit a reportable limit.
    pub exit_code: i32,
}

impl Outputs {
    fn document(&self, cfg: &ExperimentConfig, with_tables: bool) -> Value {
        let mut doc = json!({
            "command": self.command,
            "config": cfg,
            "rng": pgd_core::rng::ALGORITHM,
            "report": self.report,
        });
        if with_tables {
            let tables: serde_json::Map<String, Value> =
                self.tables.iter().map(|t| (t.name.clone(), t.to_json())).collect();
            doc["tables"] = Value::Object(tables);
        } else {
            doc["csv_files"] = json!(self.tables.iter().map(|t| self.csv_name(t)).collect::<Vec<_>>());
        }
        doc
    }

    fn csv_name(&self, t: &Table) -> String {
        format!("{}_{}.csv", self.command, t.name)
    }

    /// File names and contents. The JSON report always carries the resolved
    /// configuration; with CSV output each table goes to its own file.
    pub fn render(&self, cfg: &ExperimentConfig) -> Result<Vec<(String, Vec<u8>)>, CliError> {
        let json_tables = cfg.output.format == Format::Json;
        let mut report = serde_json::to_vec_pretty(&self.document(cfg, json_tables))
            .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        report.push(b'\n');
        let mut files = vec![(format!("{}.json", self.command), report)];
        if !json_tables {
            for t in &self.tables {
                files.push((self.csv_name(t), t.to_csv()?));
            }
        }
        Ok(files)
    }

    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, bytes) in self.render(cfg)? {
            let path = dir.join(name);
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}
