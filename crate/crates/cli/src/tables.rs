//! CSV table assembly: every table starts with a `#` comment recording the
//! binary version, the command configuration and the seed, so identical
//! invocations produce byte-identical files.

use std::io::Write;
use std::path::Path;

use crate::CliError;

pub struct Table {
    pub comment: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(config: &str, columns: Vec<&'static str>) -> Self {
        Table {
            comment: format!("# stiefel v{} | {config}", env!("CARGO_PKG_VERSION")),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.comment);
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Numeric column values, skipping rows where the cell is empty.
    pub fn numeric_column(&self, name: &str) -> Vec<(usize, f64)> {
        let idx = self
            .columns
            .iter()
            .position(|c| *c == name)
            .unwrap_or_else(|| panic!("no column {name}"));
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, row)| row[idx].parse::<f64>().ok().map(|v| (i, v)))
            .collect()
    }
}

pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, content)
                .map_err(|e| CliError::failure(format!("cannot write {}: {e}", p.display())))?;
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}
